"""PV/BESS sizing with SOC-tapered charging limits, plus a pack charging simulator."""

__version__ = "0.1.0"
