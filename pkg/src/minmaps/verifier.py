"""Residual checks for the structure equations of minimal graphs.

Each verify_* function evaluates one identity that holds exactly for a
minimal map and returns the discrete residual field. Residuals combine an
FD evaluation of a derivative (one side) with frame and curvature algebra
(the other side); on smooth minimal fixtures they contract at second order
under grid refinement, and on maps with closed-form singular data the
algebraic side is exact so the residual isolates pure stencil error.

Laplacians follow the sign convention Delta = div grad, so the identities
are stated for -Delta (nonnegative on concave-down bumps).

Angle-equation residuals are masked where 1 - phi^2 (resp. 1 - theta^2)
drops below a floor: at complex or anti-complex points both sides vanish
identically and the quotient geometry degenerates, so the residual there
is pure cancellation noise.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import stencils
from .errors import ConfigError
from .graph_geometry import (
    GraphGrid, ambient_curvature, form_on_frame, gradient_norm_sq_array,
    graph_grid, laplace_beltrami_array,
)
from .pointwise import MapField
from .surface import TheoremHypotheses

__all__ = [
    "IdentityKind", "ResidualReport", "ConvergenceStudy", "HypothesisCheck",
    "Certificate", "MinimumProbe", "ProbeStatus",
    "verify_pullback_derivative", "verify_form_laplacian",
    "verify_jacobian_laplacians", "verify_gradient_identities",
    "refinement_study", "check_hypotheses", "area_decreasing_certificate",
    "interior_minimum_probe", "MUTATIONS",
]

ANGLE_MASK_FLOOR = 1e-8
EXACT_FLOOR = 1e-12
MINIMALITY_FACTOR = 10.0

MUTATIONS = (None, "flip_sigma_perp", "swap_curvatures")


class IdentityKind(enum.Enum):
    PULLBACK_DERIVATIVE = "pullback_derivative"
    FORM_LAPLACIAN = "form_laplacian"
    JACOBIAN_LAPLACIANS = "jacobian_laplacians"
    GRADIENT_IDENTITIES = "gradient_identities"


@dataclass(frozen=True)
class ResidualReport:
    identity: IdentityKind
    components: dict[str, np.ndarray]
    residual_field: np.ndarray
    norm_inf: float
    norm_l2: float
    h: float
    minimality_defect: float
    masked_points: int = 0
    mutation: Optional[str] = None


def _nan_pointwise_max(arrays: Sequence[np.ndarray]) -> np.ndarray:
    stacked = np.abs(np.stack(arrays, axis=0))
    filled = np.where(np.isnan(stacked), -np.inf, stacked)
    out = filled.max(axis=0)
    all_nan = np.isnan(stacked).all(axis=0)
    return np.where(all_nan, np.nan, out)


def _make_report(kind: IdentityKind, gg: GraphGrid,
                 components: dict[str, np.ndarray],
                 masked_points: int = 0,
                 mutation: Optional[str] = None) -> ResidualReport:
    grid = gg.grid
    defect = gg.max_norm_H
    if defect > MINIMALITY_FACTOR * grid.h ** 2 and mutation is None:
        warnings.warn(
            f"map is not numerically minimal (max |H| = {defect:.3e} exceeds "
            f"{MINIMALITY_FACTOR:g} h^2 = {MINIMALITY_FACTOR * grid.h ** 2:.3e}); "
            "the identity residuals will not contract",
            RuntimeWarning, stacklevel=3)
    residual = _nan_pointwise_max(list(components.values()))
    return ResidualReport(
        identity=kind,
        components=components,
        residual_field=residual,
        norm_inf=stencils.finite_abs_max(residual),
        norm_l2=stencils.finite_l2(residual, grid.cell_area),
        h=grid.h,
        minimality_defect=defect,
        masked_points=masked_points,
        mutation=mutation,
    )


# ------------------------------------------------------------ the identities

def verify_pullback_derivative(mapfield: MapField) -> ResidualReport:
    """First-order identity: frame derivatives of the two Jacobian functions.

    For each parallel factor form, e_k(omega(e1, e2)) expands through the
    second fundamental form because the tangential connection terms cancel
    in the antisymmetric pairing:

        e_k(u) = sum_alpha A^alpha_k1 omega(e_alpha, e2)
                         + A^alpha_k2 omega(e1, e_alpha)
    """
    gg = graph_grid(mapfield)
    pw = gg.pw
    grid = mapfield.grid
    comps: dict[str, np.ndarray] = {}
    for idx, u in ((1, pw.u1), (2, pw.u2)):
        ux, uy = grid.d_x(u), grid.d_y(u)
        w_a2 = {a: form_on_frame(gg, idx, a, 2) for a in (3, 4)}
        w_1a = {a: form_on_frame(gg, idx, 1, a) for a in (3, 4)}
        for k in (1, 2):
            vk = gg.frame[..., k - 1, 0:2]  # chart shadow of the tangent frame
            lhs = vk[..., 0] * ux + vk[..., 1] * uy
            rhs = np.zeros_like(lhs)
            for a in (3, 4):
                rhs = rhs + gg.A[..., a - 3, k - 1, 0] * w_a2[a]
                rhs = rhs + gg.A[..., a - 3, k - 1, 1] * w_1a[a]
            comps[f"u{idx}_e{k}"] = lhs - rhs
    return _make_report(IdentityKind.PULLBACK_DERIVATIVE, gg, comps)


def verify_form_laplacian(mapfield: MapField) -> ResidualReport:
    """Second-order identity: the rough Laplacian of each pulled-back form.

    Evaluated on the frame pair (e1, e2), where omega(e1, e2) is the
    Jacobian function u:

        -Delta u = S1 + S2 + S3
        S1 = sum_{alpha,k,l} A^alpha_k1 A^alpha_kl omega(e_l, e2)
                           + A^alpha_k2 A^alpha_kl omega(e1, e_l)
        S2 = -2 sum_{alpha,beta,k} A^alpha_k1 A^beta_k2 omega(e_alpha, e_beta)
        S3 = sum_{alpha,k} R(e_k, e1, e_k, e_alpha) omega(e_alpha, e2)
                         + R(e_k, e2, e_k, e_alpha) omega(e1, e_alpha)
    """
    gg = graph_grid(mapfield)
    pw = gg.pw
    grid = mapfield.grid
    E = gg.frame
    comps: dict[str, np.ndarray] = {}
    for idx, u in ((1, pw.u1), (2, pw.u2)):
        w = {(a, b): form_on_frame(gg, idx, a, b)
             for a in (1, 2, 3, 4) for b in (2, 3, 4)}
        w[(1, 1)] = np.zeros_like(u)
        lhs = -laplace_beltrami_array(u, gg.g, grid)

        S1 = np.zeros_like(u)
        for a in (3, 4):
            for k in (0, 1):
                for l in (0, 1):
                    Akl = gg.A[..., a - 3, k, l]
                    S1 = S1 + gg.A[..., a - 3, k, 0] * Akl * w[(l + 1, 2)]
                    S1 = S1 + gg.A[..., a - 3, k, 1] * Akl * w[(1, l + 1)]
        S2 = np.zeros_like(u)
        for a in (3, 4):
            for b in (3, 4):
                for k in (0, 1):
                    S2 = S2 - 2.0 * gg.A[..., a - 3, k, 0] * gg.A[..., b - 3, k, 1] * w[(a, b)]
        S3 = np.zeros_like(u)
        for a in (3, 4):
            ea = E[..., a - 1, :]
            for k in (0, 1):
                ek = E[..., k, :]
                r1 = ambient_curvature(ek, E[..., 0, :], ek, ea,
                                       pw.gM, pw.gN, gg.sigmaM, gg.sigmaN)
                r2 = ambient_curvature(ek, E[..., 1, :], ek, ea,
                                       pw.gM, pw.gN, gg.sigmaM, gg.sigmaN)
                S3 = S3 + r1 * w[(a, 2)] + r2 * w[(1, a)]
        comps[f"omega{idx}"] = lhs - (S1 + S2 + S3)
    return _make_report(IdentityKind.FORM_LAPLACIAN, gg, comps)


def _jacobian_rhs(gg: GraphGrid, mutation: Optional[str]) -> tuple[np.ndarray, np.ndarray]:
    pw = gg.pw
    u1, u2 = pw.u1, pw.u2
    nA2, sp = gg.norm_A_sq, gg.sigma_perp
    sM, sN = gg.sigmaM, gg.sigmaN
    if mutation == "flip_sigma_perp":
        sp = -sp
    elif mutation == "swap_curvatures":
        sM, sN = sN, sM
    elif mutation is not None:
        raise ConfigError(f"unknown mutation {mutation!r}")
    q = 1.0 - u1 ** 2 - u2 ** 2
    rhs1 = nA2 * u1 + 2.0 * sp * u2 + sM * q * u1 - 2.0 * sN * u1 * u2 ** 2
    rhs2 = nA2 * u2 + 2.0 * sp * u1 + sN * q * u2 - 2.0 * sM * u1 ** 2 * u2
    return rhs1, rhs2


def verify_jacobian_laplacians(mapfield: MapField,
                               mutation: Optional[str] = None) -> ResidualReport:
    """Coupled elliptic system satisfied by the two Jacobian functions.

    -Delta u1 = |A|^2 u1 + 2 sigma_perp u2 + sigmaM (1 - u1^2 - u2^2) u1
                - 2 sigmaN u1 u2^2    (and symmetrically for u2)

    A mutation deliberately corrupts one structural ingredient; the guard
    tests assert that the corrupted residual stops contracting.
    """
    gg = graph_grid(mapfield)
    pw = gg.pw
    grid = mapfield.grid
    rhs1, rhs2 = _jacobian_rhs(gg, mutation)
    comps = {
        "u1": -laplace_beltrami_array(pw.u1, gg.g, grid) - rhs1,
        "u2": -laplace_beltrami_array(pw.u2, gg.g, grid) - rhs2,
    }
    return _make_report(IdentityKind.JACOBIAN_LAPLACIANS, gg, comps,
                        mutation=mutation)


def verify_gradient_identities(mapfield: MapField) -> ResidualReport:
    """Gradient and Laplacian equations for the angle sums phi and theta.

        2 |grad phi|^2   = (|A|^2 - 2 sigma_perp)(1 - phi^2)
        2 |grad theta|^2 = (|A|^2 + 2 sigma_perp)(1 - theta^2)
        -Delta phi   = (|A|^2 - 2 sp) phi
                       + (sigmaM (phi + theta) + sigmaN (phi - theta))(1 - phi^2)/2
        -Delta theta = (|A|^2 + 2 sp) theta
                       + (sigmaM (phi + theta) - sigmaN (phi - theta))(1 - theta^2)/2
    """
    gg = graph_grid(mapfield)
    pw = gg.pw
    grid = mapfield.grid
    phi, theta = pw.phi, pw.theta
    nA2, sp = gg.norm_A_sq, gg.sigma_perp
    sM, sN = gg.sigmaM, gg.sigmaN

    qphi = 1.0 - phi ** 2
    qtheta = 1.0 - theta ** 2
    mask_phi = qphi < ANGLE_MASK_FLOOR
    mask_theta = qtheta < ANGLE_MASK_FLOOR

    grad_phi = 2.0 * gradient_norm_sq_array(phi, gg.g, grid) - (nA2 - 2.0 * sp) * qphi
    grad_theta = 2.0 * gradient_norm_sq_array(theta, gg.g, grid) - (nA2 + 2.0 * sp) * qtheta
    lap_phi = (-laplace_beltrami_array(phi, gg.g, grid)
               - ((nA2 - 2.0 * sp) * phi
                  + 0.5 * (sM * (phi + theta) + sN * (phi - theta)) * qphi))
    lap_theta = (-laplace_beltrami_array(theta, gg.g, grid)
                 - ((nA2 + 2.0 * sp) * theta
                    + 0.5 * (sM * (phi + theta) - sN * (phi - theta)) * qtheta))

    comps = {
        "grad_phi": np.where(mask_phi, np.nan, grad_phi),
        "lap_phi": np.where(mask_phi, np.nan, lap_phi),
        "grad_theta": np.where(mask_theta, np.nan, grad_theta),
        "lap_theta": np.where(mask_theta, np.nan, lap_theta),
    }
    masked = int(np.sum(mask_phi & np.isfinite(phi))
                 + np.sum(mask_theta & np.isfinite(theta)))
    return _make_report(IdentityKind.GRADIENT_IDENTITIES, gg, comps,
                        masked_points=masked)


# -------------------------------------------------------- refinement studies

@dataclass(frozen=True)
class ConvergenceStudy:
    hs: tuple[float, ...]
    norms: tuple[float, ...]
    orders: tuple[float, ...]
    estimated_order: float
    exact: bool

    @property
    def second_order(self) -> bool:
        """True when the residual contracts like h^2 (or sits at the floor)."""
        return self.exact or 1.5 <= self.estimated_order <= 2.5


def refinement_study(make_field: Callable[[int], MapField],
                     ns: Sequence[int],
                     quantity: Callable[[MapField], float],
                     *, floor: float = EXACT_FLOOR) -> ConvergenceStudy:
    """Measure the contraction order of a scalar diagnostic under refinement.

    make_field(n) must produce maps on grids whose spacing halves from one
    n to the next (e.g. 17, 33, 65 on a fixed Dirichlet chart). Orders are
    log2 ratios of consecutive norms; if every norm sits below the floor the
    diagnostic is flagged exact instead.
    """
    if len(ns) < 3:
        raise ConfigError("refinement study needs at least three grids")
    hs, norms = [], []
    for n in ns:
        mf = make_field(n)
        hs.append(mf.grid.h)
        norms.append(float(quantity(mf)))
    for h0, h1 in zip(hs, hs[1:]):
        if not 0.49 < h1 / h0 < 0.51:
            raise ConfigError(
                f"grid spacings must halve between studies (got {h0:g} -> {h1:g})")
    if max(norms) < floor:
        return ConvergenceStudy(tuple(hs), tuple(norms), (), float("inf"), True)
    orders = []
    for a, b in zip(norms, norms[1:]):
        if b == 0.0:
            orders.append(float("inf"))
        else:
            orders.append(float(np.log2(a / b)))
    return ConvergenceStudy(tuple(hs), tuple(norms), tuple(orders),
                            float(np.mean(orders)), False)


# --------------------------------------------------- hypotheses and certificates

@dataclass(frozen=True)
class HypothesisCheck:
    ok: bool
    min_sigma_source: float
    min_sigma_target: float
    max_sigma_target: float
    sigma: float
    beta: float


def check_hypotheses(mapfield: MapField, hyp: TheoremHypotheses,
                     *, slack: float = 1e-12) -> HypothesisCheck:
    """Check the curvature pinching: sigmaM >= -sigma, -beta <= sigmaN <= -sigma."""
    X, Y = mapfield.grid.mesh()
    sM = np.broadcast_to(mapfield.source.curvature(X, Y), X.shape)
    f1, f2 = mapfield.values[..., 0], mapfield.values[..., 1]
    sN = np.broadcast_to(mapfield.target.curvature(f1, f2), X.shape)
    lo_M = float(np.min(sM))
    lo_N, hi_N = float(np.min(sN)), float(np.max(sN))
    ok = (lo_M >= -hyp.sigma - slack
          and hi_N <= -hyp.sigma + slack
          and lo_N >= -hyp.beta - slack)
    return HypothesisCheck(ok=ok, min_sigma_source=lo_M,
                           min_sigma_target=lo_N, max_sigma_target=hi_N,
                           sigma=hyp.sigma, beta=hyp.beta)


@dataclass(frozen=True)
class Certificate:
    """Grid extrema certifying (or refuting) the area-decreasing property."""

    min_phi: float
    min_phi_at: tuple[float, float]
    min_theta: float
    min_theta_at: tuple[float, float]
    max_abs_jf: float
    max_abs_jf_at: tuple[float, float]
    tol: float
    area_decreasing: bool
    hypothesis_ok: Optional[bool] = None


def _argext(a: np.ndarray, grid, pick_min: bool) -> tuple[float, tuple[float, float]]:
    flat = np.where(np.isfinite(a), a, np.inf if pick_min else -np.inf)
    idx = int(np.argmin(flat) if pick_min else np.argmax(flat))
    i, j = np.unravel_index(idx, a.shape)
    return float(a[i, j]), grid.point(int(i), int(j))


def area_decreasing_certificate(mapfield: MapField,
                                hypotheses: Optional[TheoremHypotheses] = None,
                                *, tol: float = 0.0) -> Certificate:
    """Certify phi >= -tol and theta >= -tol (equivalently |J_f| <= 1) on the grid."""
    pw = mapfield.pointwise
    min_phi, at_phi = _argext(pw.phi, mapfield.grid, True)
    min_theta, at_theta = _argext(pw.theta, mapfield.grid, True)
    max_jf, at_jf = _argext(np.abs(pw.jf), mapfield.grid, False)
    hyp_ok = None
    if hypotheses is not None:
        hyp_ok = check_hypotheses(mapfield, hypotheses).ok
    return Certificate(
        min_phi=min_phi, min_phi_at=at_phi,
        min_theta=min_theta, min_theta_at=at_theta,
        max_abs_jf=max_jf, max_abs_jf_at=at_jf,
        tol=tol,
        area_decreasing=bool(min_phi >= -tol and min_theta >= -tol),
        hypothesis_ok=hyp_ok,
    )


# ------------------------------------------------------------- minimum probe

class ProbeStatus(enum.Enum):
    PASS = "pass"
    INCONCLUSIVE_BOUNDARY = "inconclusive_boundary"
    REFUSED_NOT_MINIMAL = "refused_not_minimal"
    VIOLATION = "violation"


@dataclass(frozen=True)
class MinimumProbe:
    status: ProbeStatus
    field_name: str
    value: float
    location: tuple[float, float]
    gradient_norm: Optional[float]
    laplacian: Optional[float]
    pde_bound: Optional[float]
    minimality_defect: float
    tol: float


def _probe_decision(global_min: float, interior_min: float,
                    laplacian: Optional[float], pde_bound: float,
                    defect: float, minimality_threshold: float,
                    tol: float, hypotheses_ok: bool = True) -> ProbeStatus:
    """Pure decision logic of the minimum probe (separable for testing).

    A nonnegative global minimum leaves nothing to refute. A negative
    minimum attained only on the boundary ring is outside the interior
    argument's reach, as is any negative minimum when the curvature
    hypotheses fail (the minimum principle then says nothing). A certified
    negative interior minimum (discrete Laplacian >= -tol, curvature bound
    strictly positive, hypotheses satisfied) contradicts the minimum
    principle and is flagged as a pipeline inconsistency.
    """
    if defect > minimality_threshold:
        return ProbeStatus.REFUSED_NOT_MINIMAL
    if global_min >= -tol:
        return ProbeStatus.PASS
    if not hypotheses_ok:
        return ProbeStatus.INCONCLUSIVE_BOUNDARY
    if interior_min > global_min or laplacian is None or not np.isfinite(laplacian):
        return ProbeStatus.INCONCLUSIVE_BOUNDARY
    if laplacian >= -tol and pde_bound > tol:
        return ProbeStatus.VIOLATION
    return ProbeStatus.INCONCLUSIVE_BOUNDARY


def interior_minimum_probe(mapfield: MapField, field_name: str,
                           hypotheses: TheoremHypotheses,
                           *, tol: Optional[float] = None) -> MinimumProbe:
    """Probe the discrete minimum of phi or theta against the strong
    minimum principle.

    For a numerically minimal map the angle cosines cannot attain a
    negative interior minimum: there -Delta u >= sigma |u| (1 - u^2) > 0
    would force Delta u < 0, contradicting Delta u >= 0 at a minimum. The
    probe refuses maps whose mean curvature defect exceeds the minimality
    threshold, reports negative minima that escape to the boundary as
    inconclusive, and flags VIOLATION only when the discrete Laplacian and
    the curvature bound certify an actual contradiction (which indicates a
    broken invariant, not a sharp theorem failure).

    The reported record describes the minimizer over the probe domain
    (points where the graph Laplacian is evaluable); its gradient norm and
    Laplacian are included for PASS and VIOLATION outcomes.
    """
    if field_name not in ("phi", "theta"):
        raise ConfigError("field_name must be 'phi' or 'theta'")
    gg = graph_grid(mapfield)
    pw = gg.pw
    grid = mapfield.grid
    h2 = grid.h ** 2
    if tol is None:
        tol = MINIMALITY_FACTOR * h2
    defect = gg.max_norm_H
    u = pw.phi if field_name == "phi" else pw.theta
    global_min, global_at = _argext(u, grid, True)

    lap_field = laplace_beltrami_array(u, gg.g, grid)
    grad_field = gradient_norm_sq_array(u, gg.g, grid)
    probe_ok = np.isfinite(u) & np.isfinite(lap_field)
    lap: Optional[float] = None
    grad: Optional[float] = None
    if probe_ok.any():
        masked = np.where(probe_ok, u, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked)), u.shape)
        interior_min = float(u[i, j])
        interior_at = grid.point(int(i), int(j))
        lap = float(lap_field[i, j])
        if np.isfinite(grad_field[i, j]):
            grad = float(np.sqrt(max(grad_field[i, j], 0.0)))
    else:
        interior_min, interior_at = np.inf, global_at

    threshold = MINIMALITY_FACTOR * h2
    pde_bound = float(-hypotheses.sigma * interior_min
                      * (1.0 - interior_min ** 2))
    status = _probe_decision(global_min, interior_min, lap, pde_bound,
                             defect, threshold, tol,
                             check_hypotheses(mapfield, hypotheses).ok)
    show = status in (ProbeStatus.PASS, ProbeStatus.VIOLATION)
    if show:
        value, location = interior_min, interior_at
    else:
        value, location = global_min, global_at
    return MinimumProbe(status, field_name, value, location,
                        grad if show else None,
                        lap if show else None,
                        pde_bound if show else None, defect, tol)
