"""Command-line client for the extray service.

Each subcommand builds the same request model the HTTP endpoint accepts and
either calls the handler in-process (default) or posts it to a running
server (--server).  Reports are written as canonical JSON so identical
configurations reproduce byte-identical outputs.

Exit codes: 0 complete/PASS, 2 a verification verdict failed, 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request
from pathlib import Path

from . import jsonio
from .errors import ExtrayError
from .service.app import (
    PipelineStageError,
    handle_cycles,
    handle_fixed_rays,
    handle_partition,
    handle_pipeline,
    handle_probe,
    handle_ray,
    handle_render,
    handle_renorm,
    handle_table,
)
from .service.models import (
    CyclesRequest,
    FixedRaysRequest,
    PartitionRequest,
    PipelineRequest,
    ProbeRequest,
    RayRequest,
    RenderRequest,
    RenormRequest,
    TableRequest,
)

_HANDLERS = {
    "ray": (RayRequest, handle_ray, "/ray"),
    "fixed-rays": (FixedRaysRequest, handle_fixed_rays, "/fixed-rays"),
    "partition": (PartitionRequest, handle_partition, "/partition"),
    "cycles": (CyclesRequest, handle_cycles, "/cycles"),
    "renorm": (RenormRequest, handle_renorm, "/renorm"),
    "probe": (ProbeRequest, handle_probe, "/probe"),
    "landing-table": (TableRequest, handle_table, "/landing-table"),
    "render": (RenderRequest, handle_render, "/render"),
    "pipeline": (PipelineRequest, handle_pipeline, "/pipeline"),
}


def _add_common(p: argparse.ArgumentParser, *, poly: bool = True) -> None:
    if poly:
        p.add_argument("--poly", help="coefficients constant-first, or q:c for z^2+c")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--config", help="key = value config file; flags override")
    p.add_argument("--server", help="base URL of a running service; "
                                    "default runs in-process")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="extray",
        description="external rays, potentials, separations and censuses "
                    "for polynomial Julia sets",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="PPM image of the filled Julia set")
    _add_common(p)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--center")
    p.add_argument("--half-width", type=float, dest="half_width")
    p.add_argument("--budget", type=int)
    p.add_argument("--rays", help="comma-separated angles to overlay")
    p.add_argument("--equipotentials", help="comma-separated levels")
    p.add_argument("--markers", help="comma-separated complex points")

    p = sub.add_parser("ray", help="trace one angle orbit, JSON lines out")
    _add_common(p)
    p.add_argument("--angle", required=False)
    p.add_argument("--pot-lo", type=float, dest="pot_lo")
    p.add_argument("--pot-hi", type=float, dest="pot_hi")
    p.add_argument("--steps-per-halving", type=int, dest="steps_per_halving")

    p = sub.add_parser("fixed-rays", help="land all rays fixed by the m-th iterate")
    _add_common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--max-period", type=int, dest="max_period")
    p.add_argument("--pot-lo", type=float, dest="pot_lo")

    p = sub.add_parser("partition", help="cut the plane and verify separation")
    _add_common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--max-period", type=int, dest="max_period")
    p.add_argument("--pot-lo", type=float, dest="pot_lo")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("cycles", help="cycle census, optionally region-filtered")
    _add_common(p)
    p.add_argument("--max-period", type=int, dest="max_period")
    p.add_argument("--center")
    p.add_argument("--radius", type=float)
    p.add_argument("--cell-of", dest="cell_of")
    p.add_argument("--m", type=int)
    p.add_argument("--pot-lo", type=float, dest="pot_lo")
    p.add_argument("--table", action="store_true",
                   help="aligned text table, one row per cycle")

    p = sub.add_parser("renorm", help="polynomial-like extraction around a seed")
    _add_common(p)
    p.add_argument("--seed", required=False)
    p.add_argument("--n-iter", type=int, dest="n_iter")
    p.add_argument("--resolution", type=float)
    p.add_argument("--budget", type=int)
    p.add_argument("--r0", type=float)

    p = sub.add_parser("probe", help="accumulation evidence for a target point")
    _add_common(p)
    p.add_argument("--target")
    p.add_argument("--fixed")
    p.add_argument("--max-period", type=int, dest="max_period")
    p.add_argument("--angles", help="comma-separated angles (overrides periodic pool)")
    p.add_argument("--pot-lo", type=float, dest="pot_lo")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--table", action="store_true",
                   help="aligned rows sorted by distance to the target")
    p.add_argument("--jsonl", action="store_true",
                   help="one JSON record per ray instead of a document")

    p = sub.add_parser("landing-table", help="periodic ray landings vs the census")
    _add_common(p)
    p.add_argument("--max-period", type=int, dest="max_period")

    p = sub.add_parser("pipeline", help="census, separation, verification, probe")
    _add_common(p)
    p.add_argument("--max-period", type=int, dest="max_period")
    p.add_argument("--depth", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--pot-lo", type=float, dest="pot_lo")
    p.add_argument("--resolution", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--budget", type=int)

    p = sub.add_parser("serve", help="run the HTTP service with uvicorn")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8777)
    return ap


_LIST_FIELDS = {"rays", "equipotentials", "markers", "angles"}


def _collect_options(args: argparse.Namespace, model_cls) -> dict:
    values: dict = {}
    if getattr(args, "config", None):
        text = Path(args.config).read_text()
        values.update(jsonio.parse_config_file(text))
    fields = model_cls.model_fields
    for name in fields:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    out = {}
    for name, val in values.items():
        if name not in fields:
            continue
        if name in _LIST_FIELDS and isinstance(val, str):
            items = [s.strip() for s in val.split(",") if s.strip()]
            if name == "equipotentials":
                out[name] = [float(s) for s in items]
            else:
                out[name] = items
        else:
            out[name] = val
    return out


def _post(server: str, path: str, payload: dict) -> bytes:
    req = urllib.request.Request(
        server.rstrip("/") + path,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        return resp.read()


def _write(out: str | None, data: bytes) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


def _probe_table(report: dict) -> str:
    lines = [f"epsilon: {report['epsilon']}   pot_lo: {report['pot_lo']}   "
             f"implication holds: {report['implication_holds']}",
             f"{'angle':>8}  {'d(target)':>12}  {'d(fixed)':>12}  status"]
    for rec in report["records"]:
        mark = " *" if rec["approaches_target"] else ""
        lines.append(f"{rec['angle']:>8}  {rec['min_distance_to_target']:>12.4e}  "
                     f"{rec['min_distance_to_fixed']:>12.4e}  {rec['status']}{mark}")
    return "\n".join(lines) + "\n"


def _cycles_table(report: dict) -> str:
    lines = [f"region: {report['region']}   max period: {report['max_period']}",
             f"{'period':>6}  {'class':<24} {'multiplier':<28} first point"]
    for row in report["cycles"]:
        mult = complex(row["multiplier"][0], row["multiplier"][1])
        p0 = complex(row["points"][0][0], row["points"][0][1])
        tag = f"x{row['multiplicity']}" if row.get("multiplicity", 1) > 1 else ""
        lines.append(f"{row['period']:>6}  {row['class']:<24} "
                     f"{f'{mult:.6g}':<28} {p0:.6g} {tag}")
    lines.append(f"undecided: {report['undecided_count']}   "
                 f"excluded: {report['excluded_count']}")
    return "\n".join(lines) + "\n"


def _emit_json(doc: dict, out: str | None) -> None:
    _write(out, (jsonio.dumps(doc, indent=2) + "\n").encode("utf-8"))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("extray.service.app:app", host=args.host, port=args.port)
        return 0

    model_cls, handler, path = _HANDLERS[args.command]
    try:
        request = model_cls(**_collect_options(args, model_cls))
    except ExtrayError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Exception as exc:  # pydantic validation
        print(f"invalid options: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "render":
            if args.server:
                data = _post(args.server, path, request.model_dump())
            else:
                data = handler(request)
            _write(args.out, data)
            return 0
        if args.server:
            raw = _post(args.server, path, request.model_dump())
            doc = json.loads(raw)
        else:
            doc = handler(request).model_dump()
    except PipelineStageError as exc:
        # stage failures keep the finished stages on disk for inspection
        partial = dict(exc.partial)
        partial["aborted_at_stage"] = exc.stage
        partial["error"] = str(exc)
        _emit_json(partial, args.out)
        print(str(exc), file=sys.stderr)
        return 1
    except (ExtrayError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1

    if args.command == "cycles" and getattr(args, "table", False):
        _write(args.out, _cycles_table(doc["report"]).encode("utf-8"))
        return 0

    if args.command == "probe" and getattr(args, "table", False):
        _write(args.out, _probe_table(doc["report"]).encode("utf-8"))
        return 0
    if args.command == "probe" and getattr(args, "jsonl", False):
        lines = [jsonio.dumps(rec) for rec in doc["report"]["records"]]
        _write(args.out, ("\n".join(lines) + "\n").encode("utf-8"))
        return 0

    if args.command == "ray":
        lines = [jsonio.dumps(rec) for rec in doc["records"]]
        lines.append(jsonio.dumps({"functional_residual": doc["functional_residual"]}))
        _write(args.out, ("\n".join(lines) + "\n").encode("utf-8"))
        return 0

    if args.command == "renorm" and args.out:
        base = Path(args.out)
        inner_ref = base.with_suffix(".inner.json")
        outer_ref = base.with_suffix(".outer.json")
        _emit_json(doc.pop("inner_mask"), str(inner_ref))
        _emit_json(doc.pop("outer_mask"), str(outer_ref))
        doc["inner_mask_file"] = inner_ref.name
        doc["outer_mask_file"] = outer_ref.name
        _emit_json(doc, args.out)
        return 0

    _emit_json(doc, args.out)
    if doc.get("passed") is False:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
