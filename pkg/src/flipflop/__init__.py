"""Quadratic planar map model of the R-S flip-flop and its dynamics."""

from .mapcore import EscapeError, NotAFixedPointError, Params, Point, iterate, orbit, step

__version__ = "0.1.0"

__all__ = ["EscapeError", "NotAFixedPointError", "Params", "Point", "iterate", "orbit", "step", "__version__"]
