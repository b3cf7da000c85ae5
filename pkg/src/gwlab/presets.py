"""Built-in (map, observable) pairs."""
import math

from .dynamics import CircleMapSpec
from .weierstrass import ObservableSpec

PRESETS = {
    # doubling map with v = cos(2 pi x): a Weierstrass cosine series
    "classic": (
        CircleMapSpec(2, (), "doubling"),
        ObservableSpec(0.0, ((1, 1.0, 0.0),), "cos"),
    ),
    # v built so that alpha = sin(2 pi x) / (2 pi) exactly
    "smooth": (
        CircleMapSpec(2, (), "doubling"),
        ObservableSpec(0.0, ((2, 0.0, 1.0 / (2.0 * math.pi)), (1, 0.0, -1.0 / math.pi)), "coboundary"),
    ),
    "nonlinear": (
        CircleMapSpec(2, ((1, 0.0, 0.1),), "doubling+0.1sin"),
        ObservableSpec(0.0, ((1, 1.0, 0.0), (2, 0.0, 0.5)), "cos+0.5sin2"),
    ),
    "cubic": (
        CircleMapSpec(3, ((1, 0.04, 0.0), (2, 0.0, 0.05)), "tripling+0.04cos+0.05sin2"),
        ObservableSpec(0.0, ((1, 0.0, 1.0), (2, 0.5, 0.0)), "sin+0.5cos2"),
    ),
}


def preset(name):
    """Return ``(CircleMapSpec, ObservableSpec)`` for a named preset."""
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
