"""FastAPI service wrapping the core computations.

Every endpoint is a thin adapter over a plain handler function; the CLI
calls the same handlers in-process, so service and command line expose one
behavior.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Response

from ..angles import format_angle, parse_angle
from ..census import census, cycles_in_cell, cycles_in_disc, cycles_of_rays_in_cell
from ..errors import ExtrayError
from ..parsing import parse_complex, parse_polynomial
from ..poly import CycleClass, critical_points
from ..probe import landing_accessibility_table, probe_accumulation
from ..rays import land_orbit, ray_functional_check
from ..render import RenderSpec, render
from ..renorm import connectivity_evidence, extract, renormalize_iterate, select_regular_value
from ..separation import (
    build_fixed_collection,
    build_partition,
    critical_correspondence,
    locate,
    markers_from_cycles,
    preimage_collection,
    stabilization_period,
    verify_cell_map_functoriality,
    verify_marker_separation,
)
from .models import (
    CyclesRequest,
    CyclesResponse,
    FixedRaysRequest,
    FixedRaysResponse,
    PartitionRequest,
    PartitionResponse,
    PipelineRequest,
    PipelineResponse,
    ProbeRequest,
    ProbeResponse,
    RayRequest,
    RayResponse,
    RenderRequest,
    RenormRequest,
    RenormResponse,
    TableRequest,
    TableResponse,
)


def _ray_dict(angle, ray) -> dict:
    out = {
        "angle": format_angle(angle),
        "status": ray.status,
        "landing": ([ray.landing_point.real, ray.landing_point.imag]
                    if ray.landing_point is not None else None),
        "landing_period": ray.landing_period,
        "landing_class": ray.landing_class.value if ray.landing_class else None,
    }
    if ray.landing_multiplier is not None:
        out["landing_multiplier"] = [ray.landing_multiplier.real,
                                     ray.landing_multiplier.imag]
    return out


def handle_ray(req: RayRequest) -> RayResponse:
    poly = parse_polynomial(req.poly)
    t = parse_angle(req.angle)
    rays = land_orbit(poly, t, pot_lo=req.pot_lo, pot_hi=req.pot_hi,
                      steps_per_halving=req.steps_per_halving)
    records: list[dict] = []
    for a in sorted(rays):
        records.extend(rays[a].to_records())
    residual = ray_functional_check(poly, rays, t)
    return RayResponse(config=req.model_dump(), records=records,
                       functional_residual=residual)


def _stabilization(poly, max_period: int) -> int:
    return stabilization_period(census(poly, max_period).cycles)


def handle_fixed_rays(req: FixedRaysRequest) -> FixedRaysResponse:
    poly = parse_polynomial(req.poly)
    m = req.m if req.m is not None else _stabilization(poly, req.max_period)
    col = build_fixed_collection(poly, m, pot_lo=req.pot_lo)
    part = build_partition(col)
    rays = [_ray_dict(a, col.rays[a]) for a in col.angles]
    groups = [[format_angle(a) for a in g] for g in part.co_landing_groups()]
    return FixedRaysResponse(config=req.model_dump(), m=m, rays=rays,
                             co_landing_groups=groups)


def _partition_report(poly, req: PartitionRequest) -> tuple[dict, bool]:
    m = req.m if req.m is not None else _stabilization(poly, req.max_period)
    cens = census(poly, req.max_period)
    cols = [build_fixed_collection(poly, m, pot_lo=req.pot_lo)]
    for _ in range(req.depth):
        cols.append(preimage_collection(poly, cols[-1], 1, pot_lo=req.pot_lo))
    parts = [build_partition(c) for c in cols]
    part = parts[0]
    markers = markers_from_cycles(cens.cycles)
    marker_sep = verify_marker_separation(part, markers)
    crit = critical_points(poly)
    correspondence = critical_correspondence(part, cens.cycles, crit)
    report: dict = {
        "m": m,
        "levels": [
            {
                "level": i,
                "angles": [format_angle(a) for a in p.collection.angles],
                "cells": len(p.cells),
                "euler_cells": p.euler_cell_count(),
                "vertices": p.n_vertices,
                "edges": p.n_edges,
            }
            for i, p in enumerate(parts)
        ],
        "cells": [
            {
                "index": c.index,
                "gaps": [[a, b] for a, b in c.gaps],
                "boundary_angles": [format_angle(a) for a in c.boundary_angles],
                "reference_point": [c.reference_point.real, c.reference_point.imag],
            }
            for c in part.cells
        ],
        "landing_clusters": [[p.real, p.imag] for p in part.clusters],
        "co_landing_groups": [[format_angle(a) for a in g]
                              for g in part.co_landing_groups()],
        "marker_assignments": [
            {
                "marker": [mk.point.real, mk.point.imag],
                "class": mk.cycle_class.value,
                "cycle": mk.cycle_index,
                "cell": cell if isinstance(cell, int) else cell,
            }
            for mk, cell in marker_sep.assignments
        ],
        "verdicts": {
            "marker_separation": marker_sep.verdict,
            "critical_correspondence": correspondence.verdict,
        },
        "marker_separation_violations": marker_sep.violations,
        "critical_correspondence": {
            "non_repelling_cycles": correspondence.n_non_repelling,
            "critical_points": correspondence.n_critical,
            "count_ok": correspondence.count_ok,
            "cycles": correspondence.cycle_entries,
        },
    }
    passed = marker_sep.passed and correspondence.passed
    if req.depth >= 1:
        functoriality = verify_cell_map_functoriality(poly, parts, n_samples=req.samples)
        report["verdicts"]["cell_map_functoriality"] = functoriality.verdict
        report["cell_map_functoriality"] = {
            "checked": functoriality.checked,
            "excluded": functoriality.excluded,
            "excluded_rate": functoriality.excluded_rate,
            "violations": functoriality.violations,
        }
        passed = passed and functoriality.passed
    return report, passed


def handle_partition(req: PartitionRequest) -> PartitionResponse:
    poly = parse_polynomial(req.poly)
    report, passed = _partition_report(poly, req)
    return PartitionResponse(config=req.model_dump(), report=report, passed=passed)


def handle_cycles(req: CyclesRequest) -> CyclesResponse:
    poly = parse_polynomial(req.poly)
    if req.center is not None and req.radius is not None:
        rep = cycles_in_disc(poly, parse_complex(req.center), req.radius,
                             req.max_period)
    elif req.cell_of is not None:
        m = req.m if req.m is not None else _stabilization(poly, req.max_period)
        part = build_partition(build_fixed_collection(poly, m, pot_lo=req.pot_lo))
        cell = locate(part, parse_complex(req.cell_of))
        if not isinstance(cell, int):
            raise ExtrayError(f"cell seed located to {cell}")
        rep = cycles_in_cell(poly, part, cell, req.max_period)
    else:
        rep = census(poly, req.max_period)
    report = {
        "polynomial": rep.polynomial,
        "region": rep.region,
        "max_period": rep.max_period,
        "cycles": rep.rows(),
        "undecided_count": rep.undecided_count,
        "excluded_count": rep.excluded_count,
        "small_cycle_count": rep.small_cycle_count,
    }
    return CyclesResponse(config=req.model_dump(), report=report)


def handle_renorm(req: RenormRequest) -> RenormResponse:
    poly = parse_polynomial(req.poly)
    seed = parse_complex(req.seed)
    if req.n_iter > 1:
        plm, conn = renormalize_iterate(poly, req.n_iter, seed,
                                        resolution=req.resolution,
                                        orbit_budget=req.budget)
        r0 = plm.r0
    else:
        r0 = req.r0 if req.r0 is not None else select_regular_value(
            poly, seed, orbit_budget=min(req.budget, 2000),
            resolution=max(req.resolution, 0.02))
        plm = extract(poly, seed, r0, req.resolution)
        conn = connectivity_evidence(plm, req.budget)
    return RenormResponse(
        config=req.model_dump(),
        r0=plm.r0,
        degree=plm.degree,
        connectivity=conn.verdict,
        critical_orbits=conn.per_critical,
        inner_mask=plm.inner.to_json(),
        outer_mask=plm.outer.to_json(),
    )


def handle_probe(req: ProbeRequest) -> ProbeResponse:
    from ..angles import periodic_angles

    poly = parse_polynomial(req.poly)
    if req.angles:
        angles = {parse_angle(a) for a in req.angles}
    else:
        angles = set()
        for n in range(1, req.max_period + 1):
            angles.update(periodic_angles(poly.degree, n))
    rep = probe_accumulation(poly, parse_complex(req.target),
                             parse_complex(req.fixed), angles,
                             pot_lo=req.pot_lo, epsilon=req.epsilon,
                             potential_threshold=req.potential_threshold)
    return ProbeResponse(config=req.model_dump(), report=rep.to_json())


def handle_table(req: TableRequest) -> TableResponse:
    poly = parse_polynomial(req.poly)
    table = landing_accessibility_table(poly, req.max_period)
    return TableResponse(config=req.model_dump(), table=table.to_json())


def handle_render(req: RenderRequest) -> bytes:
    poly = parse_polynomial(req.poly)
    spec = RenderSpec(
        width=req.width,
        height=req.height,
        center=parse_complex(req.center),
        half_width=req.half_width,
        iter_budget=req.budget,
        ray_angles=[parse_angle(a) for a in req.rays],
        equipotentials=list(req.equipotentials),
        markers=[parse_complex(mk) for mk in req.markers],
    )
    return render(poly, spec)


class PipelineStageError(ExtrayError):
    """A pipeline stage failed; carries the stage name and partial outputs."""

    code = "PIPELINE_STAGE_FAILED"

    def __init__(self, stage: str, cause: Exception, partial: dict):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.partial = partial


def handle_pipeline(req: PipelineRequest) -> PipelineResponse:
    poly = parse_polynomial(req.poly)
    stages: dict = {}

    def guard(stage: str, fn):
        try:
            return fn()
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(
                stage, exc, {"config": req.model_dump(), "stages": stages}
            ) from exc

    cens = guard("census", lambda: census(poly, req.max_period))
    stages["census"] = {
        "max_period": req.max_period,
        "cycles": [
            {
                "period": rec.period,
                "points": [[p.real, p.imag] for p in rec.points],
                "multiplier": [rec.multiplier.real, rec.multiplier.imag],
                "class": rec.cycle_class.value,
                "multiplicity": rec.multiplicity,
            }
            for rec in cens.cycles
        ],
    }
    m = guard("stabilization_period", lambda: stabilization_period(cens.cycles))
    stages["stabilization_period"] = m

    part_req = PartitionRequest(poly=req.poly, m=m, depth=req.depth,
                                max_period=req.max_period, pot_lo=req.pot_lo,
                                samples=req.samples)
    part_report, part_ok = guard("partition",
                                 lambda: _partition_report(poly, part_req))
    stages["partition"] = part_report

    def cell_stage():
        col = build_fixed_collection(poly, m, pot_lo=req.pot_lo)
        part = build_partition(col)
        reports = []
        d = poly.degree
        ray_p = req.ray_cycle_max_period
        while d**ray_p - 1 > 2**12 and ray_p > 1:
            ray_p -= 1
        for cell in part.cells:
            in_cell = cycles_in_cell(poly, part, cell.index, req.max_period)
            ray_rep = cycles_of_rays_in_cell(poly, part, cell.index, ray_p)
            reports.append({
                "cell": cell.index,
                "cycles_fully_inside": len(in_cell.cycles),
                "undecided_cycles": in_cell.undecided_count,
                "ray_report": ray_rep.to_json(),
            })
        return reports

    cell_reports = guard("cells", cell_stage)
    stages["cells"] = cell_reports

    def probe_stage():
        from ..poly import evaluate as _eval

        crit = critical_points(poly)
        target = _eval(poly, crit[0][0])
        non_rep = [rec for rec in cens.cycles
                   if rec.cycle_class is not CycleClass.REPELLING]
        if non_rep:
            indiff = sorted(non_rep, key=lambda r: abs(abs(r.multiplier) - 1.0))
            fixed_pt = indiff[0].points[0]
        else:
            ray0 = land_orbit(poly, parse_angle("0"), pot_lo=req.pot_lo)[parse_angle("0")]
            fixed_pt = ray0.landing_point if ray0.landing_point is not None else 0j
        probe_req = ProbeRequest(poly=req.poly,
                                 target=f"{target.real}{target.imag:+}i",
                                 fixed=f"{fixed_pt.real}{fixed_pt.imag:+}i",
                                 max_period=req.probe_max_period,
                                 pot_lo=max(req.pot_lo, 1e-7),
                                 epsilon=req.epsilon)
        return handle_probe(probe_req).report

    stages["probe"] = guard("probe", probe_stage)

    verdicts = dict(part_report["verdicts"])
    ray_ok = all(cr["ray_report"]["cyclic_order_preserving"]
                 and cr["ray_report"]["common_period_consistent"]
                 or cr["ray_report"]["not_applicable"]
                 for cr in cell_reports)
    verdicts["ray_cycles"] = "PASS" if ray_ok else "FAIL"
    passed = part_ok and ray_ok
    return PipelineResponse(config=req.model_dump(), stages=stages,
                            verdicts=verdicts, passed=passed)


app = FastAPI(title="extray",
              description="External rays, potentials, separations and censuses "
                          "for polynomial Julia sets")


def _wrap(handler, req):
    try:
        return handler(req)
    except (ExtrayError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/ray", response_model=RayResponse)
def ray_endpoint(req: RayRequest) -> RayResponse:
    return _wrap(handle_ray, req)


@app.post("/fixed-rays", response_model=FixedRaysResponse)
def fixed_rays_endpoint(req: FixedRaysRequest) -> FixedRaysResponse:
    return _wrap(handle_fixed_rays, req)


@app.post("/partition", response_model=PartitionResponse)
def partition_endpoint(req: PartitionRequest) -> PartitionResponse:
    return _wrap(handle_partition, req)


@app.post("/cycles", response_model=CyclesResponse)
def cycles_endpoint(req: CyclesRequest) -> CyclesResponse:
    return _wrap(handle_cycles, req)


@app.post("/renorm", response_model=RenormResponse)
def renorm_endpoint(req: RenormRequest) -> RenormResponse:
    return _wrap(handle_renorm, req)


@app.post("/probe", response_model=ProbeResponse)
def probe_endpoint(req: ProbeRequest) -> ProbeResponse:
    return _wrap(handle_probe, req)


@app.post("/landing-table", response_model=TableResponse)
def table_endpoint(req: TableRequest) -> TableResponse:
    return _wrap(handle_table, req)


@app.post("/render")
def render_endpoint(req: RenderRequest) -> Response:
    data = _wrap(handle_render, req)
    return Response(content=data, media_type="image/x-portable-pixmap")


@app.post("/pipeline", response_model=PipelineResponse)
def pipeline_endpoint(req: PipelineRequest) -> PipelineResponse:
    return _wrap(handle_pipeline, req)
