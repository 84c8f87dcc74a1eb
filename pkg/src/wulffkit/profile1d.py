"""One-dimensional profiles, their conservation law, and the Liouville
and gauge-endpoint diagnostics.

A one-dimensional solution u(x) = u0(omega . x) of the Euler-Lagrange
equation obeys the first integral

    b(H(omega) u0'(s)) = c - F(u0(s)),

with b the gauge of B and c the gauge level of the potential at the
profile's limits.  Profiles are constructed either by quadrature from
this conservation law or by integrating the second-order profile ODE;
the two constructions are independent and cross-certify each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .anisotropy import Anisotropy, BProfile, gauge_b
from .errors import (DegeneracyError, ExtentError, RangeError, UsageError)
from .grid import GridField, GridSpec
from .pfunction import PointState
from .potential import Potential

__all__ = [
    "ProfileSolution", "invert_gauge", "profile_by_quadrature",
    "profile_by_ode", "liouville_scan", "cu_endpoint_check", "embed_1d",
    "LiouvilleReport", "TouchPoint", "GaugeEndpointReport",
]


def invert_gauge(profile: BProfile, y, t_max: float,
                 tol: float = 1e-13):
    """The unique t in [0, t_max] with b(t) = y (b is strictly increasing).

    Vectorized over y; bracketed bisection refined by Newton, to
    |b(t) - y| <= tol * max(1, y).  Raises RangeError when y > b(t_max).
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y).copy()
    if np.any(y < -1e-15):
        raise RangeError("gauge values are non-negative")
    y[y < 0.0] = 0.0
    top = gauge_b(profile, t_max)
    if np.any(y > top * (1.0 + 1e-12) + 1e-300):
        raise RangeError("requested gauge value exceeds b(t_max)")
    lo = np.zeros_like(y)
    hi = np.full_like(y, float(t_max))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        too_low = gauge_b(profile, mid) < y
        lo = np.where(too_low, mid, lo)
        hi = np.where(too_low, hi, mid)
    t = 0.5 * (lo + hi)
    for _ in range(4):
        pos = t > 0.0
        if not np.any(pos):
            break
        jet = profile.jets(np.maximum(t, 1e-300), order=2)
        slope = jet.hessian[..., 0, 0] * t  # b'(t) = B''(t) t
        step = np.where(pos & (slope > 0.0),
                        (gauge_b(profile, t) - y) / np.where(slope > 0, slope, 1.0),
                        0.0)
        t = np.clip(t - step, 0.0, t_max)
    t[y == 0.0] = 0.0
    return float(t[0]) if scalar else t


@dataclass
class ProfileSolution:
    """A sampled 1D profile with its conservation-law residual."""

    s_grid: np.ndarray
    u0: np.ndarray
    du0: np.ndarray
    omega: np.ndarray
    c_u0: float
    conservation_residual: np.ndarray
    anisotropy: Anisotropy
    bprofile: BProfile
    potential: Potential
    method: str = ""
    spline: CubicHermiteSpline | None = dc_field(default=None, repr=False)

    @property
    def s_min(self) -> float:
        return float(self.s_grid[0])

    @property
    def s_max(self) -> float:
        return float(self.s_grid[-1])

    @property
    def h_omega(self) -> float:
        return float(self.anisotropy.value(self.omega))

    def __call__(self, s):
        return self.spline(s)

    def slope(self, s):
        return self.spline.derivative()(s)

    def states(self, s=None) -> PointState:
        """Exact pointwise states (value, gradient, Hessian) along the
        profile line, for gradient-bound equality checks.

        The second derivative comes from the profile ODE, so it requires
        B'' > 0 at the sampled slopes; pass `s` avoiding the flat tails.
        """
        if s is None:
            keep = self.du0 > 1e-12 * max(1.0, float(self.du0.max()))
            s = self.s_grid[keep]
        s = np.asarray(s, dtype=float)
        u = self.spline(s)
        du = self.slope(s)
        hw = self.h_omega
        t = np.maximum(du * hw, 1e-300)
        b2 = self.bprofile.jets(t, order=2).hessian[..., 0, 0]
        ddu = -self.potential.d1(u) / (b2 * hw ** 2)
        omega = self.omega
        x = s[:, None] * omega[None, :]
        grad = du[:, None] * omega[None, :]
        hess = ddu[:, None, None] * omega[None, :, None] * omega[None, None, :]
        return PointState(x=x, u=u, grad_u=grad, hess_u=hess)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("s,u0,du0,residual\n")
            for s, u, du, r in zip(self.s_grid, self.u0, self.du0,
                                   self.conservation_residual):
                fh.write(",".join(repr(float(v)) for v in (s, u, du, r))
                         + "\n")


def _unit(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    norm = np.sqrt(np.sum(omega * omega))
    if norm == 0.0:
        raise UsageError("direction must be nonzero")
    return omega / norm


def _gauge_level(potential: Potential, u_minus: float, u_plus: float) -> float:
    f_lo = float(potential.value(u_minus))
    f_hi = float(potential.value(u_plus))
    scale = max(1.0, abs(f_lo), abs(f_hi))
    if abs(f_lo - f_hi) > 1e-10 * scale:
        raise UsageError(
            f"potential levels differ at the endpoints: F({u_minus}) = "
            f"{f_lo}, F({u_plus}) = {f_hi}")
    interior = np.linspace(u_minus, u_plus, 2001)[1:-1]
    if np.any(potential.value(interior) >= f_lo):
        raise UsageError("no heteroclinic: the potential reaches its "
                         "endpoint level inside the range")
    return f_lo


def _bracket_tmax(profile: BProfile, y_max: float) -> float:
    t = 1.0
    for _ in range(200):
        if gauge_b(profile, t) >= y_max:
            return t
        t *= 2.0
    raise RangeError("gauge bracket did not capture the requested level")


def profile_by_quadrature(a: Anisotropy, profile: BProfile,
                          potential: Potential, omega, u_minus: float,
                          u_plus: float, grid: int = 2001,
                          s_span: float | None = None) -> ProfileSolution:
    """Increasing heteroclinic from u_minus to u_plus by quadrature.

    Integrates ds/du = 1 / u0'(u) with the slope read off the
    conservation law.  The substitution u = u_minus + (u_plus - u_minus)
    sin^2(tau) removes the endpoint inverse-square-root singularity for
    transversal touching; panels grade geometrically into the corners to
    resolve exponential tails.  s = 0 is centered at the midpoint value.
    """
    if not u_plus > u_minus:
        raise UsageError("need u_minus < u_plus")
    omega = _unit(omega)
    hw = float(a.value(omega))
    if not hw > 0.0:
        raise UsageError("anisotropy must be positive along the direction")
    c = _gauge_level(potential, u_minus, u_plus)
    delta = u_plus - u_minus
    y_max = c - float(np.min(potential.value(
        np.linspace(u_minus, u_plus, 4001))))
    t_max = _bracket_tmax(profile, max(y_max * 1.5, 1e-8))

    # tau panels: linear through the bulk (odd count, so tau = pi/4 is a
    # knot and s = 0 lands exactly on the midpoint value), geometric into
    # both corners
    tau_a, tau_min = 0.05, 3.0e-7
    lin = np.linspace(tau_a, np.pi / 2 - tau_a, 2401)
    geo = tau_min * (tau_a / tau_min) ** np.linspace(0.0, 1.0, 700)
    taus = np.concatenate([geo[:-1], lin, (np.pi / 2 - geo[::-1])[1:]])
    nodes, weights = leggauss(8)

    mid = int(np.argmin(np.abs(taus - np.pi / 4)))
    lo_t, hi_t = taus[:-1], taus[1:]
    half = 0.5 * (hi_t - lo_t)
    center = 0.5 * (hi_t + lo_t)
    tq = center[:, None] + half[:, None] * nodes[None, :]
    uq = u_minus + delta * np.sin(tq) ** 2
    yq = np.clip(c - potential.value(uq), 0.0, None)
    slopes = invert_gauge(profile, yq.ravel(), t_max).reshape(tq.shape) / hw
    integrand = delta * np.sin(2.0 * tq) / np.maximum(slopes, 1e-300)
    panel = np.sum(weights[None, :] * integrand, axis=1) * half
    s_bnd = np.concatenate([[0.0], np.cumsum(panel)])
    s_bnd = s_bnd - s_bnd[mid]  # center s = 0 at the midpoint value

    u_bnd = u_minus + delta * np.sin(taus) ** 2
    y_bnd = np.clip(c - potential.value(u_bnd), 0.0, None)
    du_bnd = invert_gauge(profile, y_bnd, t_max) / hw
    keep = np.concatenate([[True], np.diff(s_bnd) > 1e-14])
    spline = CubicHermiteSpline(s_bnd[keep], u_bnd[keep], du_bnd[keep])

    lo, hi = float(s_bnd[0]), float(s_bnd[-1])
    if s_span is not None:
        if s_span > min(-lo, hi):
            raise ExtentError(
                f"requested span {s_span} exceeds the realized profile "
                f"window [{lo:.3g}, {hi:.3g}]")
        lo, hi = -s_span, s_span
    s_out = np.linspace(lo, hi, grid)
    u_out = np.clip(spline(s_out), u_minus, u_plus)
    y_out = np.clip(c - potential.value(u_out), 0.0, None)
    du_out = invert_gauge(profile, y_out, t_max) / hw
    resid = np.abs(gauge_b(profile, du_out * hw) - y_out)
    return ProfileSolution(
        s_grid=s_out, u0=u_out, du0=du_out, omega=omega, c_u0=c,
        conservation_residual=resid, anisotropy=a, bprofile=profile,
        potential=potential.gauged(u_minus, u_plus),
        method="quadrature", spline=spline)


def profile_by_ode(a: Anisotropy, profile: BProfile, potential: Potential,
                   omega, s_span: tuple[float, float], u0_init: float,
                   du0_init: float, steps: int = 2001,
                   rtol: float = 1e-10, atol: float = 1e-12,
                   d2_floor: float = 1e-12) -> ProfileSolution:
    """Profile from the second-order initial value problem.

    Integrates B''(H(omega u0')) H(omega)^2 u0'' + F'(u0) = 0 with an
    adaptive embedded Runge-Kutta 5(4) pair from the left end of
    `s_span`.  The integrator refuses to continue through B'' -> 0 and
    raises DegeneracyError with the crossing location; no solution branch
    is selected there.
    """
    if du0_init < 0.0:
        raise UsageError("initial slope must be non-negative")
    omega = _unit(omega)
    hw = float(a.value(omega))
    hw_neg = float(a.value(-omega))
    s0, s1 = float(s_span[0]), float(s_span[1])
    if not s1 > s0:
        raise UsageError("s_span must be increasing")
    s_out = np.linspace(s0, s1, steps)

    f1_init = float(potential.d1(u0_init))
    if du0_init == 0.0 and f1_init == 0.0:
        u = np.full(steps, float(u0_init))
        du = np.zeros(steps)
        c = float(potential.value(u0_init))
        spline = CubicHermiteSpline(s_out, u, du)
        return ProfileSolution(
            s_grid=s_out, u0=u, du0=du, omega=omega, c_u0=c,
            conservation_residual=np.zeros(steps), anisotropy=a,
            bprofile=profile, potential=potential, method="ode",
            spline=spline)

    def arg(v: float) -> float:
        return v * hw if v >= 0.0 else -v * hw_neg

    if float(profile.d2_bound_eval(arg(du0_init))) <= d2_floor:
        raise DegeneracyError(
            "profile ODE is degenerate at the initial slope "
            f"(B'' <= {d2_floor:g}); no continuation branch is chosen",
            location=s0)

    def rhs(s, y):
        u, v = y
        b2 = float(profile.d2_bound_eval(arg(v)))
        return [v, -float(potential.d1(u)) / (b2 * hw ** 2)]

    def degenerate(s, y):
        return float(profile.d2_bound_eval(arg(y[1]))) - d2_floor
    degenerate.terminal = True
    degenerate.direction = -1

    sol = solve_ivp(rhs, (s0, s1), [float(u0_init), float(du0_init)],
                    method="RK45", rtol=rtol, atol=atol,
                    dense_output=True, events=degenerate)
    if sol.t_events[0].size:
        raise DegeneracyError(
            "profile integration reached a degenerate slope "
            f"(B'' <= {d2_floor:g}); no continuation branch is chosen",
            location=float(sol.t_events[0][0]))
    if not sol.success:
        raise RuntimeError(f"profile integration failed: {sol.message}")
    y = sol.sol(s_out)
    u, du = y[0], y[1]
    t = np.array([arg(v) for v in du])
    c = float(gauge_b(profile, t[0]) + potential.value(u[0]))
    resid = np.abs(gauge_b(profile, t) + potential.value(u) - c)
    spline = CubicHermiteSpline(s_out, u, du)
    return ProfileSolution(
        s_grid=s_out, u0=u, du0=du, omega=omega, c_u0=c,
        conservation_residual=resid, anisotropy=a, bprofile=profile,
        potential=potential, method="ode", spline=spline)


# ---------------------------------------------------------------------------
# diagnostics

def _extract_values(source) -> np.ndarray:
    if isinstance(source, GridField):
        return source.values.ravel()
    if isinstance(source, ProfileSolution):
        return source.u0
    return np.asarray(source, dtype=float).ravel()


@dataclass(frozen=True)
class TouchPoint:
    r: float
    growth_exponent: float
    growth_ok: bool
    attained: bool
    violation: bool


@dataclass(frozen=True)
class LiouvilleReport:
    c_u: float
    p_star: float
    touch_points: list[TouchPoint]
    non_constant: bool
    any_violation: bool
    note: str


def liouville_scan(source, potential: Potential, p_star: float,
                   growth_check_radius: float = 1e-2,
                   tol: float = 1e-9) -> LiouvilleReport:
    """Locate gauge-touching potential values and test the growth
    condition that forces touching solutions to be constant.

    A touching value r has F(r) = c_u and F'(r) = 0.  Near each the
    growth exponent q of |F'| is fitted over 20 log-spaced radii; the
    constancy conclusion needs q >= p_star - 1.  A non-constant source
    attaining such an r while the condition holds is flagged.
    """
    u = _extract_values(source)
    lo, hi = float(u.min()), float(u.max())
    span = hi - lo
    gauged = potential.gauged(lo, hi)
    c_u = gauged.c_u
    scale = max(1.0, abs(c_u))

    grid = np.linspace(lo, hi, 100_001) if span > 0 else np.array([lo])
    fv = gauged.value(grid)
    dv = gauged.d1(grid)
    near = (np.abs(fv - c_u) <= tol * scale) & (np.abs(dv) <= tol * scale)
    candidates = []
    idx = np.flatnonzero(near)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1)
        groups = np.split(idx, breaks + 1)
        for gidx in groups:
            best = gidx[np.argmin(np.abs(fv[gidx] - c_u))]
            candidates.append(float(grid[best]))

    non_constant = span > 1e-12 * max(1.0, abs(lo), abs(hi))
    touch = []
    any_violation = False
    radii = np.logspace(-6.0, math.log10(growth_check_radius), 20)
    for r in candidates:
        probes = np.concatenate([r - radii, r + radii])
        dist = np.concatenate([radii, radii])
        vals = np.abs(gauged.d1(probes))
        ok = vals > 1e-300
        if ok.sum() >= 4:
            q = float(np.polyfit(np.log(dist[ok]), np.log(vals[ok]), 1)[0])
        else:
            q = float("inf")  # derivative is identically ~0 near r
        growth_ok = q >= p_star - 1.0 - 0.05
        attained = bool(np.min(np.abs(u - r)) <= 1e-9 * max(1.0, abs(r)))
        violation = bool(attained and non_constant and growth_ok)
        any_violation |= violation
        touch.append(TouchPoint(r=r, growth_exponent=q, growth_ok=growth_ok,
                                attained=attained, violation=violation))
    if any_violation:
        note = ("non-constant input attains a touching value although the "
                "growth condition holds: constancy conclusion violated")
    elif touch and not all(t.growth_ok for t in touch):
        note = ("growth condition fails at a touching value; non-constant "
                "touching solutions are possible and no conclusion is drawn")
    else:
        note = "no violation"
    return LiouvilleReport(c_u=float(c_u), p_star=float(p_star),
                           touch_points=touch, non_constant=non_constant,
                           any_violation=any_violation, note=note)


@dataclass(frozen=True)
class GaugeEndpointReport:
    c_u_scan: float
    endpoint_max: float
    passed: bool
    interior_attained: bool
    interior_witness: float | None


def cu_endpoint_check(source, potential: Potential,
                      tol: float = 1e-10) -> GaugeEndpointReport:
    """Dense-scan gauge constant versus the endpoint formula.

    The gauge constant over [min u, max u] should equal
    max(F(min u), F(max u)); an interior sample attaining the gauge is
    reported for the dichotomy diagnostic.
    """
    u = _extract_values(source)
    lo, hi = float(u.min()), float(u.max())
    gauged = potential.gauged(lo, hi)
    c_scan = gauged.c_u
    end_max = float(max(gauged.value(lo), gauged.value(hi)))
    scale = max(1.0, abs(c_scan), abs(end_max))
    passed = abs(c_scan - end_max) <= tol * scale

    interior_attained = False
    witness = None
    if hi > lo:
        edge = 1e-9 * max(1.0, hi - lo)
        inner = (u > lo + edge) & (u < hi - edge)
        if np.any(inner):
            fv = gauged.value(u[inner])
            k = int(np.argmax(fv))
            if fv[k] >= c_scan - tol * scale:
                interior_attained = True
                witness = float(u[inner][k])
    return GaugeEndpointReport(c_u_scan=float(c_scan),
                               endpoint_max=end_max, passed=bool(passed),
                               interior_attained=interior_attained,
                               interior_witness=witness)


def embed_1d(profile: ProfileSolution, grid: GridSpec) -> GridField:
    """Sample u0(omega . x) on a grid by cubic interpolation.

    Raises ExtentError when the projected coordinates leave the profile's
    window.  The interpolation error estimate (fourth-order in the table
    spacing) is attached to the returned field.
    """
    omega = profile.omega
    if omega.size != grid.ndim:
        raise UsageError("profile direction and grid dimension differ")
    pts = grid.points()
    s = pts @ omega
    if s.min() < profile.s_min - 1e-12 or s.max() > profile.s_max + 1e-12:
        raise ExtentError(
            f"projection [{s.min():.3g}, {s.max():.3g}] leaves the profile "
            f"window [{profile.s_min:.3g}, {profile.s_max:.3g}]")
    values = profile.spline(s).reshape(grid.shape)

    knots = profile.spline.x
    du4 = np.diff(profile.spline(knots), 4)
    dsm = float(np.max(np.diff(knots))) if knots.size > 1 else 0.0
    est = float(np.max(np.abs(du4)) / 384.0) if du4.size else 0.0
    field = GridField(grid, values, interp_error_estimate=est)
    field.meta["profile_method"] = profile.method
    field.meta["table_spacing_max"] = dsm
    return field
