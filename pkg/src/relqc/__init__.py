"""Detection of relatively quasiconvex subgroups of relatively hyperbolic groups."""

__version__ = "0.1.0"

from .config import build_instance, fixture_config, parse_subgroup  # noqa: E402
from .detector import Accept, Fuel, OutOfFuel, Rejected, detect, partial_algorithm  # noqa: E402

__all__ = [
    "Accept", "Fuel", "OutOfFuel", "Rejected", "build_instance", "detect", "fixture_config",
    "parse_subgroup", "partial_algorithm", "__version__",
]
