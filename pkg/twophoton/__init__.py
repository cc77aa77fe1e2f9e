"""Two-photon interference workbench for pseudo-thermal and SPDC light."""

__all__ = ["__version__"]

__version__ = "0.1.0"
