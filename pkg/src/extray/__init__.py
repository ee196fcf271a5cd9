"""extray: external rays, Green potentials, ray separations and cycle
censuses for polynomial Julia sets, with a FastAPI service and a CLI."""

from .poly import CycleClass, CycleRecord, Polynomial

__version__ = "0.1.0"
__all__ = ["Polynomial", "CycleRecord", "CycleClass", "__version__"]
