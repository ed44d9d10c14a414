"""Conformal surface charts: metrics rho^2 (dx^2 + dy^2) on planar domains.

A surface is represented by a single rectangular chart carrying a conformal
factor rho > 0. With u = log(rho) the geometry is closed-form:

    Gauss curvature   K = -rho^(-2) * (u_xx + u_yy)
    Christoffels      G^1_11 = u_x   G^1_12 = u_y   G^1_22 = -u_x
                      G^2_11 = -u_y  G^2_12 = u_x   G^2_22 = u_y

Built-in factors use these closed forms; custom factors (expression or
sampled) fall back to width-3 central stencils of order 2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import stencils
from .errors import ChartDomainError, ConfigError, NumericalError, StencilError
from .expressions import Node, evaluate, parse_scalar

__all__ = [
    "FactorKind", "ConformalMetric", "GridChart", "TheoremHypotheses",
    "gauss_curvature", "christoffels",
]


class FactorKind(enum.Enum):
    EUCLIDEAN = "euclidean"
    POINCARE_DISC = "poincare_disc"
    HYPERBOLIC_SCALED = "hyperbolic_scaled"
    SPHERE_STEREOGRAPHIC = "sphere_stereographic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ConformalMetric:
    """Conformal factor on a planar chart.

    Presets:
      EUCLIDEAN             rho = 1                      K = 0
      POINCARE_DISC         rho = 2/(1-r^2), r < 1       K = -1
      HYPERBOLIC_SCALED     rho = 2/(sqrt(s)(1-r^2))     K = -s   (s = sigma > 0)
      SPHERE_STEREOGRAPHIC  rho = 2/(1+r^2)              K = +1
      CUSTOM                rho from an expression (evaluable anywhere) or a
                            sampled field bound to a grid (evaluable on it).
    """

    kind: FactorKind
    sigma: float = 1.0
    expr: Optional[Node] = None
    samples: Optional[np.ndarray] = None
    sample_grid: Optional["GridChart"] = None
    fd_step: float = 1e-5  # stencil step for expression-backed custom factors

    def __post_init__(self):
        if self.kind is FactorKind.HYPERBOLIC_SCALED and not self.sigma > 0:
            raise ConfigError("hyperbolic_scaled requires sigma > 0")
        if self.kind is FactorKind.CUSTOM:
            if (self.expr is None) == (self.samples is None):
                raise ConfigError("custom factor needs exactly one of expr/samples")
            if self.samples is not None:
                if self.sample_grid is None:
                    raise ConfigError("sampled factor needs its grid")
                if not np.all(np.asarray(self.samples) > 0):
                    raise NumericalError("sampled conformal factor must be positive")

    # -------------------------------------------------------------- queries

    @property
    def disc_domain(self) -> bool:
        return self.kind in (FactorKind.POINCARE_DISC, FactorKind.HYPERBOLIC_SCALED)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.disc_domain:
            return np.asarray(x) ** 2 + np.asarray(y) ** 2 < 1.0
        return np.ones(np.broadcast(x, y).shape, dtype=bool)

    def check_domain(self, x: np.ndarray, y: np.ndarray, what: str = "point") -> None:
        ok = self.contains(x, y)
        if not np.all(ok):
            r2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
            raise ChartDomainError(
                f"{what} leaves the chart domain (max r = {float(np.sqrt(np.max(r2))):.6g} >= 1)")

    # ----------------------------------------------------------- evaluation

    def rho(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind is FactorKind.EUCLIDEAN:
            return np.ones(np.broadcast(x, y).shape)
        if self.kind is FactorKind.POINCARE_DISC:
            self.check_domain(x, y)
            return 2.0 / (1.0 - x * x - y * y)
        if self.kind is FactorKind.HYPERBOLIC_SCALED:
            self.check_domain(x, y)
            return 2.0 / (math.sqrt(self.sigma) * (1.0 - x * x - y * y))
        if self.kind is FactorKind.SPHERE_STEREOGRAPHIC:
            return 2.0 / (1.0 + x * x + y * y)
        if self.expr is not None:
            val = evaluate(self.expr, x, y)
            if not np.all(val > 0):
                raise NumericalError("custom conformal factor must be positive")
            return val
        return self._sample_lookup(x, y)

    def _sample_lookup(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        grid = self.sample_grid
        ii = np.rint((np.asarray(x) - grid.x0) / grid.hx).astype(int)
        jj = np.rint((np.asarray(y) - grid.y0) / grid.hy).astype(int)
        on_node = (np.abs(grid.x0 + ii * grid.hx - x) < 1e-9 * (1 + grid.hx)) & \
                  (np.abs(grid.y0 + jj * grid.hy - y) < 1e-9 * (1 + grid.hy)) & \
                  (ii >= 0) & (ii < grid.nx) & (jj >= 0) & (jj < grid.ny)
        if not np.all(on_node):
            raise ChartDomainError("sampled factor is only defined on its own grid nodes")
        return np.asarray(self.samples)[ii, jj]

    def log_rho_grad(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        """(u_x, u_y) with u = log rho; closed form for presets."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind is FactorKind.EUCLIDEAN:
            z = np.zeros(np.broadcast(x, y).shape)
            return z, z.copy()
        if self.disc_domain:
            self.check_domain(x, y)
            w = 1.0 - x * x - y * y
            return 2.0 * x / w, 2.0 * y / w
        if self.kind is FactorKind.SPHERE_STEREOGRAPHIC:
            w = 1.0 + x * x + y * y
            return -2.0 * x / w, -2.0 * y / w
        return self._custom_log_grad(x, y)

    def laplace_log_rho(self, x, y) -> np.ndarray:
        """Euclidean Laplacian of u = log rho; closed form for presets."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind is FactorKind.EUCLIDEAN:
            return np.zeros(np.broadcast(x, y).shape)
        if self.disc_domain:
            self.check_domain(x, y)
            w = 1.0 - x * x - y * y
            return 4.0 / (w * w)
        if self.kind is FactorKind.SPHERE_STEREOGRAPHIC:
            w = 1.0 + x * x + y * y
            return -4.0 / (w * w)
        return self._custom_log_laplace(x, y)

    # -------------------------------------------- custom factors (stencils)

    def _custom_step(self) -> tuple[float, float]:
        if self.samples is not None:
            return self.sample_grid.hx, self.sample_grid.hy
        return self.fd_step, self.fd_step

    def _custom_log_grad(self, x, y):
        hx, hy = self._custom_step()
        u = lambda a, b: np.log(self.rho(a, b))
        ux = (u(x + hx, y) - u(x - hx, y)) / (2 * hx)
        uy = (u(x, y + hy) - u(x, y - hy)) / (2 * hy)
        return ux, uy

    def _custom_log_laplace(self, x, y):
        hx, hy = self._custom_step()
        u = lambda a, b: np.log(self.rho(a, b))
        u0 = u(x, y)
        uxx = (u(x + hx, y) - 2 * u0 + u(x - hx, y)) / (hx * hx)
        uyy = (u(x, y + hy) - 2 * u0 + u(x, y - hy)) / (hy * hy)
        return uxx + uyy

    # ------------------------------------------------------------- geometry

    def curvature(self, x, y) -> np.ndarray:
        """Gauss curvature K = -rho^(-2) Laplace(log rho)."""
        if self.kind is FactorKind.EUCLIDEAN:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        if self.kind is FactorKind.POINCARE_DISC:
            self.check_domain(x, y)
            return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, -1.0)
        if self.kind is FactorKind.HYPERBOLIC_SCALED:
            self.check_domain(x, y)
            return np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, -self.sigma)
        if self.kind is FactorKind.SPHERE_STEREOGRAPHIC:
            return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        r = self.rho(x, y)
        return -self._custom_log_laplace(np.asarray(x, float), np.asarray(y, float)) / (r * r)

    def metric_tensor(self, x, y) -> np.ndarray:
        """g = rho^2 I with shape (..., 2, 2)."""
        r2 = self.rho(x, y) ** 2
        g = np.zeros(r2.shape + (2, 2))
        g[..., 0, 0] = r2
        g[..., 1, 1] = r2
        return g

    def christoffel_tensor(self, x, y) -> np.ndarray:
        """Gamma[..., k, i, j] of the conformal metric."""
        ux, uy = self.log_rho_grad(x, y)
        G = np.zeros(ux.shape + (2, 2, 2))
        G[..., 0, 0, 0] = ux
        G[..., 0, 0, 1] = uy
        G[..., 0, 1, 0] = uy
        G[..., 0, 1, 1] = -ux
        G[..., 1, 0, 0] = -uy
        G[..., 1, 0, 1] = ux
        G[..., 1, 1, 0] = ux
        G[..., 1, 1, 1] = uy
        return G

    # ----------------------------------------------------------- constructors

    @classmethod
    def euclidean(cls) -> "ConformalMetric":
        return cls(FactorKind.EUCLIDEAN)

    @classmethod
    def poincare_disc(cls) -> "ConformalMetric":
        return cls(FactorKind.POINCARE_DISC)

    @classmethod
    def hyperbolic(cls, sigma: float) -> "ConformalMetric":
        return cls(FactorKind.HYPERBOLIC_SCALED, sigma=float(sigma))

    @classmethod
    def sphere(cls) -> "ConformalMetric":
        return cls(FactorKind.SPHERE_STEREOGRAPHIC)

    @classmethod
    def custom_expression(cls, text: str, fd_step: float = 1e-5) -> "ConformalMetric":
        return cls(FactorKind.CUSTOM, expr=parse_scalar(text), fd_step=fd_step)

    @classmethod
    def custom_sampled(cls, samples: np.ndarray, grid: "GridChart") -> "ConformalMetric":
        return cls(FactorKind.CUSTOM, samples=np.asarray(samples, float), sample_grid=grid)


class BoundaryMode(enum.Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class GridChart:
    """Uniform rectangular grid on [x0, x1] x [y0, y1].

    Dirichlet grids include both endpoints (nx points, spacing (x1-x0)/(nx-1)).
    Periodic grids identify opposite edges and store one copy of each point
    (nx points, spacing (x1-x0)/nx). Spacings hx and hy may differ.
    """

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int
    boundary: BoundaryMode = BoundaryMode.DIRICHLET

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise StencilError("grids need nx, ny >= 5 so width-5 nested stencils fit")
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError("empty grid extent")

    @property
    def periodic(self) -> bool:
        return self.boundary is BoundaryMode.PERIODIC

    @property
    def hx(self) -> float:
        n = self.nx if self.periodic else self.nx - 1
        return (self.x1 - self.x0) / n

    @property
    def hy(self) -> float:
        n = self.ny if self.periodic else self.ny - 1
        return (self.y1 - self.y0) / n

    @property
    def h(self) -> float:
        """Reporting spacing: the coarser of the two."""
        return max(self.hx, self.hy)

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def point(self, i: int, j: int) -> tuple[float, float]:
        return float(self.x0 + i * self.hx), float(self.y0 + j * self.hy)

    def refine(self) -> "GridChart":
        """Halve both spacings (double resolution)."""
        if self.periodic:
            return GridChart(self.x0, self.x1, self.y0, self.y1,
                             2 * self.nx, 2 * self.ny, self.boundary)
        return GridChart(self.x0, self.x1, self.y0, self.y1,
                         2 * self.nx - 1, 2 * self.ny - 1, self.boundary)

    # stencil helpers bound to this grid's spacings and boundary mode
    def d_x(self, f): return stencils.d_x(f, self.hx, self.periodic)
    def d_y(self, f): return stencils.d_y(f, self.hy, self.periodic)
    def d_xx(self, f): return stencils.d_xx(f, self.hx, self.periodic)
    def d_yy(self, f): return stencils.d_yy(f, self.hy, self.periodic)
    def d_xy(self, f): return stencils.d_xy(f, self.hx, self.hy, self.periodic)


@dataclass(frozen=True)
class TheoremHypotheses:
    """Curvature bounds sigma, beta with sigma > 0, beta >= sigma.

    A source/target pair satisfies them on a grid when

        min K_M >= -sigma,   max K_N <= -sigma,   min K_N >= -beta,

    with K_M over grid points and K_N over image points.
    """

    sigma: float
    beta: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("hypotheses require sigma > 0")
        if not self.beta >= self.sigma:
            raise ConfigError("hypotheses require beta >= sigma")


def gauss_curvature(metric: ConformalMetric, p: tuple[float, float]) -> float:
    """Gauss curvature at a chart point (closed form for presets)."""
    x, y = p
    metric.check_domain(np.asarray(x), np.asarray(y))
    return float(metric.curvature(np.asarray(x, float), np.asarray(y, float)))


def christoffels(metric: ConformalMetric, p: tuple[float, float]) -> np.ndarray:
    """Christoffel symbols Gamma[k, i, j] at a chart point."""
    x, y = p
    metric.check_domain(np.asarray(x), np.asarray(y))
    return metric.christoffel_tensor(np.asarray(x, float), np.asarray(y, float))
