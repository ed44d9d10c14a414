"""Order-2 central finite-difference stencils on rectangular grids.

Fields are arrays indexed ``[i, j]`` with ``i`` along x and ``j`` along y.
On Dirichlet grids every differentiation loses one ring of validity; lost
entries are NaN, so validity tracking composes automatically through
arithmetic. Periodic grids wrap and stay valid everywhere.
"""

from __future__ import annotations

import numpy as np


def d_x(f: np.ndarray, hx: float, periodic: bool = False) -> np.ndarray:
    if periodic:
        return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * hx)
    out = np.full_like(f, np.nan)
    out[1:-1, :] = (f[2:, :] - f[:-2, :]) / (2.0 * hx)
    return out


def d_y(f: np.ndarray, hy: float, periodic: bool = False) -> np.ndarray:
    if periodic:
        return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * hy)
    out = np.full_like(f, np.nan)
    out[:, 1:-1] = (f[:, 2:] - f[:, :-2]) / (2.0 * hy)
    return out


def d_xx(f: np.ndarray, hx: float, periodic: bool = False) -> np.ndarray:
    if periodic:
        return (np.roll(f, -1, axis=0) - 2.0 * f + np.roll(f, 1, axis=0)) / (hx * hx)
    out = np.full_like(f, np.nan)
    out[1:-1, :] = (f[2:, :] - 2.0 * f[1:-1, :] + f[:-2, :]) / (hx * hx)
    return out


def d_yy(f: np.ndarray, hy: float, periodic: bool = False) -> np.ndarray:
    if periodic:
        return (np.roll(f, -1, axis=1) - 2.0 * f + np.roll(f, 1, axis=1)) / (hy * hy)
    out = np.full_like(f, np.nan)
    out[:, 1:-1] = (f[:, 2:] - 2.0 * f[:, 1:-1] + f[:, :-2]) / (hy * hy)
    return out


def d_xy(f: np.ndarray, hx: float, hy: float, periodic: bool = False) -> np.ndarray:
    # symmetric 4-point cross stencil
    if periodic:
        fe = np.roll(f, -1, axis=0)
        fw = np.roll(f, 1, axis=0)
        return (np.roll(fe, -1, axis=1) - np.roll(fe, 1, axis=1)
                - np.roll(fw, -1, axis=1) + np.roll(fw, 1, axis=1)) / (4.0 * hx * hy)
    out = np.full_like(f, np.nan)
    out[1:-1, 1:-1] = (f[2:, 2:] - f[2:, :-2] - f[:-2, 2:] + f[:-2, :-2]) / (4.0 * hx * hy)
    return out


def finite_abs_max(a: np.ndarray) -> float:
    """Max of |a| over finite entries; 0.0 when nothing is finite."""
    m = np.isfinite(a)
    if not m.any():
        return 0.0
    return float(np.max(np.abs(a[m])))


def finite_l2(a: np.ndarray, cell_area: float) -> float:
    """Grid-scaled L2 norm sqrt(sum a^2 * dA) over finite entries."""
    m = np.isfinite(a)
    if not m.any():
        return 0.0
    return float(np.sqrt(np.sum(a[m] ** 2) * cell_area))


def valid_interior(a: np.ndarray) -> np.ndarray:
    """Boolean mask of finite entries (broadcast over trailing axes if any)."""
    if a.ndim == 2:
        return np.isfinite(a)
    return np.all(np.isfinite(a), axis=tuple(range(2, a.ndim)))
