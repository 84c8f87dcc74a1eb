"""The P-function, its coefficient fields, and the bound diagnostics.

For a field u with gradient-energy profile B, anisotropy H and gauged
potential F, the P-function is

    P = B'(H(grad u)) H(grad u) - B(H(grad u)) - (c_u - F(u))
      = b(H(grad u)) - c_u + F(u),

where b is the gauge of B and c_u the gauge constant of F over the range
of u.  At entire solutions of the Euler-Lagrange equation P <= 0
pointwise, with equality propagating along connected components of
{grad u != 0}; on one-dimensional solutions P vanishes identically and
the level sets are flat.  This module evaluates P, the coefficients of
the divergence-form identity it satisfies on {grad u != 0}, the
non-negative remainder of that identity, and the residual left after
assembling all of its terms from a sampled field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from .anisotropy import Anisotropy, BProfile, gauge_b
from .calculus import StencilSpec, _diff_axis, fd_derivatives
from .errors import (AssumptionViolationError, EmptyReportError,
                     ExcludedPointError, UsageError)
from .grid import GridField, GridSpec
from .linalg import householder_frames
from .potential import Potential

__all__ = [
    "PointState", "PReport", "FlatnessReport", "PCoefficients",
    "p_value", "p_coefficients", "p_equation_residual",
    "gradient_bound_check", "rigidity_flatness",
]


@dataclass
class PointState:
    """Pointwise data (position, value, gradient, Hessian), batched on a
    leading axis when the arrays carry one."""

    x: np.ndarray
    u: np.ndarray
    grad_u: np.ndarray
    hess_u: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        self.grad_u = np.asarray(self.grad_u, dtype=float)
        self.hess_u = np.asarray(self.hess_u, dtype=float)
        sym = np.abs(self.hess_u - np.swapaxes(self.hess_u, -1, -2)).max()
        if sym > 1e-10 * (1.0 + np.abs(self.hess_u).max()):
            raise UsageError("hess_u must be symmetric")


@dataclass(frozen=True)
class PCoefficients:
    a_ij: np.ndarray
    d_ij: np.ndarray
    b_k: np.ndarray
    remainder: np.ndarray
    p_grad: np.ndarray


@dataclass
class PReport:
    """Per-point P values, remainder, identity residual and violations."""

    P: np.ndarray
    excluded: np.ndarray
    max_P: float
    tol_P: float
    c_u: float
    violations: list = dc_field(default_factory=list)
    violation_count: int = 0
    R: np.ndarray | None = None
    residual: np.ndarray | None = None
    min_R: float | None = None
    max_abs_residual: float | None = None
    el_residual_sup: float | None = None
    solves_pde: bool | None = None
    grid: GridSpec | None = None
    points: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return self.max_P <= self.tol_P

    def violations_jsonl(self) -> list[str]:
        lines = []
        for x, p in self.violations:
            rec = {"point": [float(v) for v in np.atleast_1d(x)],
                   "P": float(p)}
            lines.append(json.dumps(rec, sort_keys=True))
        return lines

    def write_csv(self, path) -> None:
        pts = self.points
        if pts is None and self.grid is not None:
            pts = self.grid.points()
        if pts is None:
            raise UsageError("report carries no point coordinates")
        n = pts.shape[-1]
        flat_p = np.ravel(self.P)
        flat_r = np.ravel(self.R) if self.R is not None \
            else np.full(flat_p.shape, np.nan)
        flat_res = np.ravel(self.residual) if self.residual is not None \
            else np.full(flat_p.shape, np.nan)
        flat_ex = np.ravel(self.excluded)
        with open(path, "w") as fh:
            cols = [f"x{i}" for i in range(n)] + ["P", "R", "residual",
                                                  "excluded"]
            fh.write(",".join(cols) + "\n")
            for i in range(flat_p.size):
                row = [repr(float(v)) for v in pts[i]]
                row += [repr(float(flat_p[i])), repr(float(flat_r[i])),
                        repr(float(flat_res[i])), str(int(flat_ex[i]))]
                fh.write(",".join(row) + "\n")


def _gauged(potential: Potential, u: np.ndarray) -> Potential:
    if potential.cu_base is not None:
        return potential
    return potential.gauged(float(np.min(u)), float(np.max(u)))


def p_value(state: PointState, a: Anisotropy, profile: BProfile,
            potential: Potential):
    """P at the state's points; the potential must carry its gauge.

    Defined for every gradient, including grad u = 0 where it reduces to
    F(u) - c_u.
    """
    h = a.value(state.grad_u)
    vals = gauge_b(profile, h) - potential.deficit(state.u)
    return vals


def _batched_kernels(grad: np.ndarray, hess: np.ndarray, u: np.ndarray,
                     a: Anisotropy, profile: BProfile, potential: Potential,
                     active: np.ndarray):
    """Coefficient fields on the active (non-excluded) points.

    Every quantity is evaluated from the pointwise closed forms: the
    gradient of P entering the drift uses P_i = B'' H H_k u_ki - G' u_i,
    not a stencil, so the only discretization in the identity residual is
    the outer divergence.
    """
    g = grad[active]
    hu = hess[active]
    uu = u[active]
    hj = a.jets(g, order=2)
    hval, hgrad, hhess = hj.value, hj.gradient, hj.hessian
    bj = profile.jets(hval, order=3)
    b1 = bj.gradient[..., 0]
    b2 = bj.hessian[..., 0, 0]
    b3 = bj.third[..., 0, 0, 0]
    if np.any(b2 <= 0.0):
        raise AssumptionViolationError(
            "B'' must stay positive on the non-degenerate set")
    g1 = -potential.d1(uu)  # derivative of the deficit c_u - F

    hk_uki = np.einsum("sk,ski->si", hgrad, hu)
    p_grad = b2[:, None] * hval[:, None] * hk_uki - g1[:, None] * g
    a_ij = b2[:, None, None] * hgrad[:, :, None] * hgrad[:, None, :] \
        + b1[:, None, None] * hhess
    d_ij = a_ij / hval[:, None, None]
    hl_pl = np.einsum("sl,sl->s", hgrad, p_grad)
    hkl_pl = np.einsum("skl,sl->sk", hhess, p_grad)
    drift = (b3 / b2 / hval ** 2 * hl_pl)[:, None] * hgrad \
        + ((b3 / b2 + b2 / b1) * g1 / hval)[:, None] * hgrad \
        + (b1 * b3 / b2 ** 2 + 1.0)[:, None] * hkl_pl / (hval ** 2)[:, None]
    remainder = b1 * b2 * np.einsum("sij,skl,sik,sjl->s",
                                    hhess, hhess, hu, hu)
    return a_ij, d_ij, drift, remainder, p_grad, hval


def p_coefficients(state: PointState, a: Anisotropy, profile: BProfile,
                   potential: Potential, theta: float = 0.0) -> PCoefficients:
    """Coefficients of the identity satisfied by P at a single state.

    Requires grad u != 0 (|grad u| > theta); raises ExcludedPointError
    otherwise and AssumptionViolationError when B'' <= 0 there.
    """
    g = np.atleast_2d(state.grad_u)
    norms = np.sqrt(np.sum(g * g, axis=-1))
    if np.any(norms <= theta):
        raise ExcludedPointError(
            "coefficients are defined only where grad u != 0")
    single = state.grad_u.ndim == 1
    hess = state.hess_u[None] if single else state.hess_u
    uval = np.atleast_1d(state.u)
    potential = _gauged(potential, uval)
    active = np.ones(g.shape[0], dtype=bool)
    a_ij, d_ij, drift, rem, p_grad, _ = _batched_kernels(
        g, hess, uval, a, profile, potential, active)
    if single:
        return PCoefficients(a_ij[0], d_ij[0], drift[0], rem[0], p_grad[0])
    return PCoefficients(a_ij, d_ij, drift, rem, p_grad)


def _divergence(components: np.ndarray, grid: GridSpec,
                spec: StencilSpec) -> np.ndarray:
    out = np.zeros(grid.shape)
    h = grid.spacing
    for axis in range(grid.ndim):
        out += _diff_axis(components[..., axis], axis,
                          h[axis] * spec.stride, grid.bc[axis], 1,
                          spec.order, spec.stride)
    return out


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0 or not mask.any():
        return mask
    return ndimage.binary_dilation(mask, iterations=radius)


def _collect_violations(points, values, mask, tol, cap=1000):
    idx = np.flatnonzero(mask.ravel() & (values.ravel() > tol))
    out = [(points[i], float(values.ravel()[i])) for i in idx[:cap]]
    return out, int(idx.size)


def p_equation_residual(field: GridField, a: Anisotropy, profile: BProfile,
                        potential: Potential, theta: float | None = None,
                        spec: StencilSpec = StencilSpec(order=2),
                        pde_tol: float = 1e-3) -> PReport:
    """Residual of the divergence-form identity for P on a sampled field.

    Assembles div(d gradP) - b.gradP - R with gradP from its pointwise
    closed form and the outer divergence from grid stencils.  Points with
    |grad u| <= theta (default 1e-6 max|grad u|), a boundary collar of
    width 2*order cells and a stencil-reach neighborhood of any excluded
    point are masked out.  For fields sampled from smooth solutions the
    reported residual is O(h^order) plus the PDE residual of the input.
    """
    grid = field.spec
    u = field.values
    grad, hess = fd_derivatives(field, spec)
    gnorm = np.sqrt(np.sum(grad * grad, axis=-1))
    if theta is None:
        theta = 1e-6 * float(gnorm.max())
    excluded = (gnorm <= theta) | grid.collar_mask(2 * spec.order)
    active = ~_dilate(excluded, (spec.order // 2) * spec.stride + 1)
    if not active.any():
        raise EmptyReportError("all grid points are excluded")

    potential = _gauged(potential, u)
    p_field = gauge_b(profile, a.value(grad.reshape(-1, grid.ndim))
                      ).reshape(grid.shape) - potential.deficit(u)

    flat_active = active.ravel()
    _, d_ij, drift, rem, p_grad, _ = _batched_kernels(
        grad.reshape(-1, grid.ndim), hess.reshape(-1, grid.ndim, grid.ndim),
        u.ravel(), a, profile, potential, flat_active)

    flux = np.zeros((u.size, grid.ndim))
    flux[flat_active] = np.einsum("sij,si->sj", d_ij, p_grad)
    div = _divergence(flux.reshape(grid.shape + (grid.ndim,)), grid, spec)
    drift_dot = np.zeros(u.size)
    drift_dot[flat_active] = np.einsum("sk,sk->s", drift, p_grad)
    rem_full = np.full(u.size, np.nan)
    rem_full[flat_active] = rem

    residual = np.full(grid.shape, np.nan)
    residual[active] = (div.ravel() - drift_dot - np.where(
        np.isnan(rem_full), 0.0, rem_full)).reshape(grid.shape)[active]

    # Euler-Lagrange residual of the input field, to flag non-solutions
    hj1 = a.jets(grad.reshape(-1, grid.ndim)[flat_active], order=1)
    bj1 = profile.jets(hj1.value, order=1)
    el_flux = np.zeros((u.size, grid.ndim))
    el_flux[flat_active] = bj1.gradient[..., :1] * hj1.gradient
    el = _divergence(el_flux.reshape(grid.shape + (grid.ndim,)), grid, spec)
    el = el + potential.d1(u)
    el_sup = float(np.abs(el[active]).max())

    rem_grid = rem_full.reshape(grid.shape)
    report = PReport(
        P=p_field, excluded=~active,
        max_P=float(p_field[active].max()),
        tol_P=np.inf, c_u=potential.c_u,
        R=rem_grid, residual=residual,
        min_R=float(np.nanmin(rem_grid)),
        max_abs_residual=float(np.nanmax(np.abs(residual))),
        el_residual_sup=el_sup, solves_pde=bool(el_sup <= pde_tol),
        grid=grid)
    return report


def gradient_bound_check(field: GridField, a: Anisotropy, profile: BProfile,
                         potential: Potential, collar: int = 4,
                         tol_p: float | None = None,
                         spec: StencilSpec = StencilSpec(order=2)) -> PReport:
    """Pointwise check of P <= tol_p away from the boundary collar.

    The gauge constant comes from the field's sampled range.  `tol_p`
    defaults to 1e-6 * max(1, c_u - min F on the range); violations list
    the offending points.
    """
    grid = field.spec
    u = field.values
    grad, _ = fd_derivatives(field, spec)
    potential = _gauged(potential, u)
    p_field = gauge_b(profile, a.value(grad.reshape(-1, grid.ndim))
                      ).reshape(grid.shape) - potential.deficit(u)
    if tol_p is None:
        lo, hi = float(u.min()), float(u.max())
        span = np.linspace(lo, hi, 10_001) if hi > lo else np.array([lo])
        scale = max(1.0, potential.c_u - float(potential.value(span).min()))
        tol_p = 1e-6 * scale
    active = ~grid.collar_mask(collar)
    if not active.any():
        raise EmptyReportError("collar excludes every point")
    pts = grid.points()
    violations, count = _collect_violations(pts, p_field, active, tol_p)
    return PReport(
        P=p_field, excluded=~active,
        max_P=float(p_field[active].max()), tol_P=float(tol_p),
        c_u=potential.c_u, violations=violations, violation_count=count,
        grid=grid)


@dataclass
class FlatnessReport:
    """Tangential curvature proxy of level sets, cross-reported with |P|."""

    block_norm: np.ndarray
    P: np.ndarray
    excluded: np.ndarray
    max_block_norm: float
    max_abs_P: float
    grid: GridSpec | None = None


def rigidity_flatness(field: GridField, a: Anisotropy, profile: BProfile,
                      potential: Potential, theta: float | None = None,
                      spec: StencilSpec = StencilSpec(order=2),
                      collar: int | None = None) -> FlatnessReport:
    """Frobenius norm of the level-set block of Hess u per point.

    At each non-excluded point the Hessian is rotated into the
    deterministic frame whose last axis is grad u / |grad u|; the leading
    (n-1) x (n-1) block is the second-fundamental-form proxy whose
    vanishing makes the level sets flat.  Reported together with P so the
    implication "P identically zero implies flat level sets" is testable.
    """
    grid = field.spec
    u = field.values
    grad, hess = fd_derivatives(field, spec)
    gnorm = np.sqrt(np.sum(grad * grad, axis=-1))
    if theta is None:
        theta = 1e-6 * float(gnorm.max())
    if collar is None:
        collar = 2 * spec.order
    excluded = (gnorm <= theta) | grid.collar_mask(collar)
    if excluded.all():
        raise EmptyReportError("all grid points are excluded")
    potential = _gauged(potential, u)
    p_field = gauge_b(profile, a.value(grad.reshape(-1, grid.ndim))
                      ).reshape(grid.shape) - potential.deficit(u)

    flat_act = ~excluded.ravel()
    g = grad.reshape(-1, grid.ndim)[flat_act]
    hu = hess.reshape(-1, grid.ndim, grid.ndim)[flat_act]
    frames = householder_frames(g)
    tan = frames[:, :, :-1]
    block = np.einsum("sia,sij,sjb->sab", tan, hu, tan)
    norms = np.sqrt(np.einsum("sab,sab->s", block, block))
    block_norm = np.full(u.size, np.nan)
    block_norm[flat_act] = norms
    block_norm = block_norm.reshape(grid.shape)
    return FlatnessReport(
        block_norm=block_norm, P=p_field, excluded=excluded,
        max_block_norm=float(norms.max()) if norms.size else np.nan,
        max_abs_P=float(np.abs(p_field[~excluded]).max()),
        grid=grid)
