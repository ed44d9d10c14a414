"""Closed-form 2x2 linear algebra, batched over leading axes."""

from __future__ import annotations

import numpy as np

from .errors import NumericalError


def det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def inv2(m: np.ndarray) -> np.ndarray:
    d = det2(m)
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / d[..., None, None]


def sym_eig2(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Eigensystem of [[a, b], [b, c]].

    Returns (lo, hi, v_lo, v_hi) with lo <= hi and orthonormal eigenvectors
    of shape (..., 2); the pair (v_lo, v_hi) is positively oriented.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    mean = 0.5 * (a + c)
    diff = 0.5 * (a - c)
    r = np.hypot(diff, b)
    lo, hi = mean - r, mean + r
    # stable eigenvector of the top eigenvalue
    vx = np.where(diff >= 0, r + diff, b)
    vy = np.where(diff >= 0, b, r - diff)
    nrm = np.hypot(vx, vy)
    tiny = nrm <= 0
    vx = np.where(tiny, 1.0, vx / np.where(tiny, 1.0, nrm))
    vy = np.where(tiny, 0.0, vy / np.where(tiny, 1.0, nrm))
    v_hi = np.stack([vx, vy], axis=-1)
    v_lo = np.stack([vy, -vx], axis=-1)  # rot(-90): det[v_lo | v_hi] = +1
    return lo, hi, v_lo, v_hi


def check_spd2(g: np.ndarray, what: str = "metric") -> None:
    d = det2(g)
    tr = g[..., 0, 0] + g[..., 1, 1]
    ok = np.isfinite(d)
    if np.any((d[ok] <= 0) | (tr[ok] <= 0)):
        raise NumericalError(f"{what} is not symmetric positive definite")


def spd_inv_sqrt2(g: np.ndarray) -> np.ndarray:
    """g^(-1/2) for SPD g via the closed form g^(1/2) = (g + sqrt(det) I) / t."""
    check_spd2(g)
    s = np.sqrt(det2(g))
    t = np.sqrt(g[..., 0, 0] + g[..., 1, 1] + 2.0 * s)
    root = g.copy()
    root[..., 0, 0] += s
    root[..., 1, 1] += s
    return inv2(root / t[..., None, None])


def apply2(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product over leading axes: (..., 2, 2) x (..., 2)."""
    return np.einsum("...ij,...j->...i", m, v)


def inner(g: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Metric pairing g(u, v) over leading axes."""
    return np.einsum("...i,...ij,...j->...", u, g, v)
