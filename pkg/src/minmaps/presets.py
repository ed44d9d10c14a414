"""Named maps, metrics, and canonical test scenarios.

Map presets are built as expression strings and parsed, so every preset
carries an exact symbolic Jacobian. Parametrised families take a suffix:
``mobius:0.3``, ``affine:1,0,0,1``, ``constant:0.1,-0.2``. Arbitrary maps
use ``expr:f1, f2``.
"""

from __future__ import annotations

import math
from typing import Callable

from .errors import ConfigError
from .expressions import MapExpr
from .pointwise import MapField
from .surface import BoundaryMode, ConformalMetric, GridChart

__all__ = [
    "map_preset", "parse_map_spec", "parse_metric_spec",
    "paper_example_field", "z_squared_field", "z_squared_mixed_field",
    "identity_hyperbolic_field", "constant_field", "mobius_field",
    "affine_field", "SCENARIOS",
]

_RADIAL = "((exp(x) - 3*exp(-x))/2)"

_FIXED_MAPS = {
    "identity": "x, y",
    "z_squared": "x^2 - y^2, 2*x*y",
    "paper_example": f"{_RADIAL} * cos(y/2), -{_RADIAL} * sin(y/2)",
}


def _num(value: float) -> str:
    return f"({value!r})"


def map_preset(name: str, *params: float) -> MapExpr:
    """Build a named map; parametrised families take positional numbers."""
    if name in _FIXED_MAPS:
        if params:
            raise ConfigError(f"map preset {name!r} takes no parameters")
        return MapExpr.parse(_FIXED_MAPS[name])
    if name == "mobius":
        if len(params) != 1:
            raise ConfigError("mobius preset needs one parameter a")
        a = float(params[0])
        if not abs(a) < 1.0:
            raise ConfigError("mobius parameter must satisfy |a| < 1")
        A, den = _num(a), f"((1 - {_num(a)}*x)^2 + {_num(a)}^2*y^2)"
        return MapExpr.parse(
            f"((x - {A})*(1 - {A}*x) - {A}*y^2) / {den},"
            f" y*(1 - {A}^2) / {den}")
    if name == "affine":
        if len(params) != 4:
            raise ConfigError("affine preset needs four parameters a,b,c,d")
        a, b, c, d = (_num(float(v)) for v in params)
        return MapExpr.parse(f"{a}*x + {b}*y, {c}*x + {d}*y")
    if name == "constant":
        if len(params) != 2:
            raise ConfigError("constant preset needs two parameters cx,cy")
        cx, cy = (_num(float(v)) for v in params)
        return MapExpr.parse(f"{cx}, {cy}")
    raise ConfigError(f"unknown map preset {name!r}")


def parse_map_spec(text: str) -> MapExpr:
    """Parse a map description: preset name, preset:params, or expr:..."""
    text = text.strip()
    if text.startswith("expr:"):
        return MapExpr.parse(text[len("expr:"):])
    if ":" in text:
        name, _, tail = text.partition(":")
        try:
            params = [float(tok) for tok in tail.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad parameter list in map spec {text!r}") from exc
        return map_preset(name.strip(), *params)
    return map_preset(text)


def parse_metric_spec(text: str) -> ConformalMetric:
    """Parse a metric description.

    Accepted forms: euclidean, poincare_disc, hyperbolic:SIGMA, sphere,
    custom:EXPRESSION (conformal factor as a function of x, y).
    """
    text = text.strip()
    if text == "euclidean":
        return ConformalMetric.euclidean()
    if text == "poincare_disc":
        return ConformalMetric.poincare_disc()
    if text == "sphere":
        return ConformalMetric.sphere()
    if text.startswith("hyperbolic"):
        _, _, tail = text.partition(":")
        if not tail:
            raise ConfigError("hyperbolic metric needs a curvature scale, e.g. hyperbolic:2")
        try:
            sigma = float(tail)
        except ValueError as exc:
            raise ConfigError(f"bad curvature scale {tail!r}") from exc
        return ConformalMetric.hyperbolic(sigma)
    if text.startswith("custom:"):
        return ConformalMetric.custom_expression(text[len("custom:"):])
    raise ConfigError(f"unknown metric {text!r}")


# ------------------------------------------------------------- canonical maps

def paper_example_field(nx: int = 65, ny: int | None = None) -> MapField:
    """Minimal surface-of-revolution style map between flat charts.

    f(x, y) = r(x) (cos(y/2), -sin(y/2)) with r = (e^x - 3 e^-x)/2, which
    satisfies the minimal map equation between Euclidean factors. Chart
    [-1.5, 1.5] x [-2, 2]; note the two spacings differ unless ny is tuned.
    """
    grid = GridChart(-1.5, 1.5, -2.0, 2.0, nx, ny if ny is not None else nx)
    return MapField.from_expr(grid, ConformalMetric.euclidean(),
                              ConformalMetric.euclidean(),
                              map_preset("paper_example"))


_Z2_HALF_WIDTH = 0.6 / math.sqrt(2.0)


def z_squared_field(n: int = 65, half_width: float = _Z2_HALF_WIDTH) -> MapField:
    """z -> z^2 between Poincare discs; holomorphic, hence minimal.

    The default square chart keeps |z| <= 0.6 so the image stays well
    inside the target disc.
    """
    grid = GridChart(-half_width, half_width, -half_width, half_width, n, n)
    return MapField.from_expr(grid, ConformalMetric.poincare_disc(),
                              ConformalMetric.poincare_disc(),
                              map_preset("z_squared"))


def z_squared_mixed_field(n: int = 65, half_width: float = _Z2_HALF_WIDTH) -> MapField:
    """z -> z^2 from the Poincare disc into a curvature -2 disc."""
    grid = GridChart(-half_width, half_width, -half_width, half_width, n, n)
    return MapField.from_expr(grid, ConformalMetric.poincare_disc(),
                              ConformalMetric.hyperbolic(2.0),
                              map_preset("z_squared"))


def identity_hyperbolic_field(n: int = 33, sigma: float = 2.0,
                              half_width: float = 0.45) -> MapField:
    """Identity between two copies of the same rescaled hyperbolic disc."""
    grid = GridChart(-half_width, half_width, -half_width, half_width, n, n)
    metric = ConformalMetric.hyperbolic(sigma)
    return MapField.from_expr(grid, metric, metric, map_preset("identity"))


def constant_field(n: int = 33, value: tuple[float, float] = (0.15, -0.2),
                   half_width: float = 0.5) -> MapField:
    """Constant map between Poincare discs; totally geodesic fibre point."""
    grid = GridChart(-half_width, half_width, -half_width, half_width, n, n)
    return MapField.from_expr(grid, ConformalMetric.poincare_disc(),
                              ConformalMetric.poincare_disc(),
                              map_preset("constant", *value))


def mobius_field(a: float = 0.3, n: int = 33, half_width: float = 0.5) -> MapField:
    """Disc automorphism z -> (z - a)/(1 - a z); a hyperbolic isometry."""
    grid = GridChart(-half_width, half_width, -half_width, half_width, n, n)
    return MapField.from_expr(grid, ConformalMetric.poincare_disc(),
                              ConformalMetric.poincare_disc(),
                              map_preset("mobius", a))


def affine_field(a: float = 2.0, b: float = 0.0, c: float = 0.0, d: float = 0.5,
                 n: int = 33, half_width: float = 1.0) -> MapField:
    """Linear map between Euclidean charts; constant singular data."""
    grid = GridChart(-half_width, half_width, -half_width, half_width, n, n)
    return MapField.from_expr(grid, ConformalMetric.euclidean(),
                              ConformalMetric.euclidean(),
                              map_preset("affine", a, b, c, d))


# ------------------------------------------------------------ CLI scenarios

SCENARIOS: dict[str, Callable[[], MapField]] = {
    "paper_example": paper_example_field,
    "z_squared": z_squared_field,
    "z_squared_mixed": z_squared_mixed_field,
    "identity_hyperbolic": identity_hyperbolic_field,
    "constant": constant_field,
    "mobius": mobius_field,
    "affine": affine_field,
}
