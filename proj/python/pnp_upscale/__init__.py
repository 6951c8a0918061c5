"""Periodic homogenization and two-scale simulation of Poisson-Nernst-Planck systems."""

try:
    from . import _pnp_upscale as _core
except ImportError:  # in-tree build: extension sits next to the package
    import _pnp_upscale as _core

from_core = (
    "ConfigError",
    "InputError",
    "PnpUpscaleError",
    "SolverError",
    "ValidationError",
    "config_hash",
    "homogenize",
    "macro_poisson",
    "run",
    "run_macro",
    "unit_cell",
)
globals().update({name: getattr(_core, name) for name in from_core})

__version__ = _core.__version__
__all__ = list(from_core) + ["porosity"]


def porosity(mask):
    """Fluid volume fraction of a boolean mask."""
    return float(mask.mean())
