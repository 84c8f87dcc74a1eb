"""Anisotropies H, gradient-energy profiles B, and their certification.

An anisotropy is a positively 1-homogeneous function H, positive away
from the origin, extended by H(0) = 0.  Three families are supported:

* Euclidean: H = |xi|,
* Matrix(M): H = sqrt(<M xi, xi>) for symmetric positive definite M,
* SphereGraph(Theta): H = |xi| * Theta(xi/|xi|) for an analytic positive
  Theta on the unit sphere (not necessarily even, so H need not be a
  norm).

A profile B is a convex increasing scalar function with B(0) = B'(0) = 0
composing to the gradient-energy density B(H(grad u)).  Every structural
hypothesis used downstream (Euler identities, convexity equivalence,
power-growth or uniform ellipticity of Hess(B o H), gauge coercivity)
is certified here as an executable sampled check with witnesses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .calculus import Jet, Jet3, jet_seeds, richardson_limit, scalar_jet
from .errors import (AssumptionViolationError, CertificationError,
                     ConstructionError, DomainError, UsageError)
from .linalg import householder_frame, jacobi_eigh

__all__ = [
    "Anisotropy", "BProfile", "AssumptionReport", "EulerReport",
    "EquivalenceReport", "SphereGraphReport", "MatrixFormResult",
    "GaugeBound",
    "euclidean", "matrix_anisotropy", "sphere_graph", "builtin_theta",
    "power_profile", "regularized_power_profile",
    "minimal_surface_profile", "custom_profile",
    "eval_jets", "check_euler_identities", "hess_BH",
    "check_convexity_equivalence", "certify_assumptions",
    "gauge_b", "gauge_power_bound", "quartic_form",
    "build_sphere_graph", "characterize_matrix_form",
]


# ---------------------------------------------------------------------------
# anisotropy families

@dataclass(frozen=True, eq=False)
class Anisotropy:
    """A positively 1-homogeneous direction-dependent cost."""

    kind: str                      # "euclidean" | "matrix" | "sphere-graph"
    dim: int
    matrix: np.ndarray | None = None
    theta: Callable | None = None
    curvature_bound: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise UsageError("dimension must be >= 1")
        if self.kind == "matrix":
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.dim, self.dim):
                raise UsageError("matrix shape does not match dimension")
            if not np.allclose(m, m.T, atol=1e-12 * (1 + np.abs(m).max())):
                raise ConstructionError("matrix must be symmetric")
            if jacobi_eigh(m)[0][0] <= 0.0:
                raise ConstructionError("matrix must be positive definite")
            object.__setattr__(self, "matrix", 0.5 * (m + m.T))
        elif self.kind == "sphere-graph":
            if self.theta is None:
                raise UsageError("sphere-graph anisotropy needs a theta")
            vals = _theta_values(self.theta, _sphere_sample(self.dim, 256))
            if np.any(vals <= 0.0):
                raise ConstructionError("theta must be positive on the sphere")
        elif self.kind != "euclidean":
            raise UsageError(f"unknown anisotropy family {self.kind!r}")

    # -- jet evaluation -------------------------------------------------
    def _h_expr(self, seeds: Sequence[Jet]) -> Jet:
        if self.kind == "euclidean":
            q = seeds[0] * seeds[0]
            for s in seeds[1:]:
                q = q + s * s
            return q ** 0.5
        if self.kind == "matrix":
            m = self.matrix
            q = None
            for i in range(self.dim):
                for j in range(self.dim):
                    if m[i, j] == 0.0:
                        continue
                    term = (m[i, j]) * (seeds[i] * seeds[j])
                    q = term if q is None else q + term
            return q ** 0.5
        # sphere-graph: H = r * Theta(xi / r)
        q = seeds[0] * seeds[0]
        for s in seeds[1:]:
            q = q + s * s
        r = q ** 0.5
        units = [s / r for s in seeds]
        return r * self.theta(units)

    def value(self, xi) -> np.ndarray:
        """H(xi), with the homogeneous extension H(0) = 0."""
        xi = np.asarray(xi, dtype=float)
        flat = xi.reshape(-1, xi.shape[-1])
        norms = np.sqrt(np.sum(flat * flat, axis=-1))
        out = np.zeros(flat.shape[0])
        ok = norms > 0.0
        if np.any(ok):
            jets = jet_seeds(flat[ok], order=1)
            out[ok] = np.asarray(self._h_expr(jets).value, dtype=float)
        return out.reshape(xi.shape[:-1]) if xi.ndim > 1 else float(out[0])

    def jets(self, xi, order: int = 3) -> Jet3:
        """Value, gradient, Hessian (and third derivatives) of H at xi.

        xi has shape (..., dim) and must be nonzero row by row.
        """
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dim:
            raise UsageError("evaluation point dimension mismatch")
        norms = np.sqrt(np.sum(xi * xi, axis=-1))
        if np.any(norms == 0.0):
            raise DomainError("anisotropy derivatives are undefined at 0")
        return Jet3.from_jet(self._h_expr(jet_seeds(xi, order)))


def euclidean(dim: int = 2) -> Anisotropy:
    return Anisotropy("euclidean", dim, label=f"euclidean(n={dim})")


def matrix_anisotropy(m) -> Anisotropy:
    m = np.asarray(m, dtype=float)
    return Anisotropy("matrix", m.shape[0], matrix=m,
                      label=f"matrix({m.shape[0]}x{m.shape[0]})")


def sphere_graph(theta: Callable, dim: int = 2,
                 curvature_bound: float | None = None,
                 label: str = "sphere-graph") -> Anisotropy:
    """Anisotropy from a graph-over-the-sphere profile Theta.

    `theta` receives the components of the unit vector xi/|xi| as jets
    and must return a jet; it therefore needs to be analytic in a
    neighborhood of the sphere.  Use `build_sphere_graph` to also certify
    convexity of the associated body.
    """
    return Anisotropy("sphere-graph", dim, theta=theta,
                      curvature_bound=curvature_bound, label=label)


def builtin_theta(spec: str) -> Callable:
    """Named sphere profiles: "constant", "ellipse(m1,m2,...)" and
    "cosine-bump(amplitude)"."""
    name, args = spec, []
    if "(" in spec:
        if not spec.endswith(")"):
            raise UsageError(f"malformed theta spec {spec!r}")
        name, rest = spec.split("(", 1)
        args = [float(a) for a in rest[:-1].split(",") if a.strip()]
    name = name.strip()
    if name == "constant":
        return lambda units: units[0] * 0.0 + 1.0
    if name == "ellipse":
        weights = args or [4.0, 1.0]

        def theta(units):
            q = weights[0] * (units[0] * units[0])
            for w, s in zip(weights[1:], units[1:]):
                q = q + w * (s * s)
            return q ** 0.5
        return theta
    if name == "cosine-bump":
        amp = args[0] if args else 0.2
        if not abs(amp) < 1.0:
            raise UsageError("cosine-bump amplitude must satisfy |a| < 1")
        return lambda units: units[0] * amp + 1.0
    raise UsageError(f"unknown theta {name!r}")


def _sphere_sample(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic unit directions: uniform angles (n=2), Fibonacci
    lattice (n=3), seeded Gaussian directions otherwise."""
    if dim == 1:
        reps = (count + 1) // 2
        return np.array([[1.0], [-1.0]] * reps)[:count]
    if dim == 2:
        ang = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    if dim == 3:
        i = np.arange(count) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / count)
        golden = np.pi * (1.0 + np.sqrt(5.0))
        theta = golden * i
        return np.stack([np.sin(phi) * np.cos(theta),
                         np.sin(phi) * np.sin(theta),
                         np.cos(phi)], axis=-1)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _theta_values(theta: Callable, units: np.ndarray) -> np.ndarray:
    jets = jet_seeds(units, order=1)
    return np.asarray(theta(jets).value, dtype=float)


def _halton_points(dim: int, count: int, seed: int) -> np.ndarray:
    sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
    return sampler.random(count)


def _annulus_sample(dim: int, count: int, seed: int,
                    lo_exp: float = -8.0, hi_exp: float = 8.0) -> np.ndarray:
    """Low-discrepancy sample of the annulus 2^lo <= |xi| <= 2^hi."""
    u = _halton_points(dim + 1, count, seed)
    dirs = ndtri(np.clip(u[:, 1:], 1e-12, 1.0 - 1e-12))
    norms = np.linalg.norm(dirs, axis=-1, keepdims=True)
    norms[norms == 0.0] = 1.0
    dirs = dirs / norms
    radii = 2.0 ** (lo_exp + (hi_exp - lo_exp) * u[:, 0])
    return radii[:, None] * dirs


# ---------------------------------------------------------------------------
# profile families

@dataclass(frozen=True, eq=False)
class BProfile:
    """Convex increasing gradient-energy profile with B(0) = B'(0) = 0."""

    kind: str        # "power" | "regularized-power" | "minimal-surface" | "custom"
    p: float | None = None
    kappa: float = 0.0
    fn: Callable | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind in ("power", "regularized-power"):
            if self.p is None or not self.p > 1.0:
                raise UsageError("profile exponent must satisfy p > 1")
            if self.kind == "regularized-power" and not 0.0 <= self.kappa < 1.0:
                raise UsageError("regularization must satisfy 0 <= kappa < 1")
        elif self.kind == "custom":
            if self.fn is None:
                raise UsageError("custom profile needs a callable")
            t = np.array([1e-3, 0.1, 0.5, 1.0, 3.0])
            b, b1, b2, _ = self.derivatives(t)
            if np.any(b <= 0) or np.any(b1 <= 0) or np.any(b2 <= 0):
                raise ConstructionError(
                    "custom profile must have B, B', B'' > 0 for t > 0")
        elif self.kind != "minimal-surface":
            raise UsageError(f"unknown profile family {self.kind!r}")

    def _expr(self, t: Jet) -> Jet:
        if self.kind == "power":
            return t ** self.p / self.p
        if self.kind == "regularized-power":
            if self.kappa == 0.0:
                return t ** self.p / self.p
            base = (t * t + self.kappa ** 2) ** (self.p / 2.0)
            return (base - self.kappa ** self.p) / self.p
        if self.kind == "minimal-surface":
            return (t * t + 1.0) ** 0.5 - 1.0
        return self.fn(t)

    def jets(self, t, order: int = 3) -> Jet3:
        """Derivatives of B at t > 0 (batched)."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0) and self.kind == "power" and self.p < 3.0:
            raise DomainError("power profile derivatives need t > 0")
        return scalar_jet(self._expr, t, order)

    def derivatives(self, t):
        """(B, B', B'', B''') at t, as arrays matching t's shape."""
        jet = self.jets(t)
        return (jet.value, jet.gradient[..., 0], jet.hessian[..., 0, 0],
                jet.third[..., 0, 0, 0])

    def d2_bound_eval(self, t):
        """B''(t) with a tiny positive floor on t, for degeneracy probing."""
        t = np.maximum(np.asarray(t, dtype=float), 1e-300)
        return self.jets(t, order=2).hessian[..., 0, 0]

    @property
    def assumed_parameters(self) -> tuple[float, float]:
        """(p, kappa) used when testing power-growth ellipticity."""
        if self.kind == "power":
            return float(self.p), 0.0
        if self.kind == "regularized-power":
            return float(self.p), float(self.kappa)
        return 2.0, 1.0  # minimal-surface and custom: uniformly elliptic scale


def power_profile(p: float) -> BProfile:
    return BProfile("power", p=float(p), label=f"power(p={p})")


def regularized_power_profile(p: float, kappa: float) -> BProfile:
    return BProfile("regularized-power", p=float(p), kappa=float(kappa),
                    label=f"regularized-power(p={p},kappa={kappa})")


def minimal_surface_profile() -> BProfile:
    return BProfile("minimal-surface", label="minimal-surface")


def custom_profile(fn: Callable, label: str = "custom") -> BProfile:
    return BProfile("custom", fn=fn, label=label)


# ---------------------------------------------------------------------------
# basic operations

def eval_jets(a: Anisotropy, xi, order: int = 3) -> Jet3:
    """Jets of H at xi (see Anisotropy.jets)."""
    return a.jets(xi, order)


def gauge_b(profile: BProfile, t):
    """The gauge b(t) = B'(t) t - B(t), with b(0) = 0."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    pos = t > 0.0
    if np.any(pos):
        jet = scalar_jet(profile._expr, t[pos], order=1)
        out[pos] = jet.gradient[..., 0] * t[pos] - jet.value
    return float(out[0]) if scalar else out


def hess_BH(a: Anisotropy, profile: BProfile, xi) -> np.ndarray:
    """Hessian of the composition B o H at xi (batched: (..., n, n)).

    Assembled from exact jets as B''(H) gradH x gradH + B'(H) HessH.
    """
    hj = a.jets(xi, order=2)
    bj = profile.jets(hj.value, order=2)
    b1 = bj.gradient[..., 0]
    b2 = bj.hessian[..., 0, 0]
    outer = hj.gradient[..., :, None] * hj.gradient[..., None, :]
    return b2[..., None, None] * outer + b1[..., None, None] * hj.hessian


# ---------------------------------------------------------------------------
# sampled certification checks

@dataclass(frozen=True)
class EulerReport:
    passed: bool
    max_value_defect: float      # |gradH.xi - H| / H
    max_hessian_defect: float    # |HessH.xi|
    max_third_defect: float      # |thirdH.xi + HessH|
    samples: int
    seed: int


def check_euler_identities(a: Anisotropy, samples: int = 1000,
                           seed: int = 0,
                           tol_value: float = 1e-9,
                           tol_hessian: float = 1e-9,
                           tol_third: float = 1e-8) -> EulerReport:
    """Degree-1 homogeneity identities contracted against the argument.

    For every sampled xi != 0:  gradH.xi = H,  HessH.xi = 0, and
    third.xi = -HessH (componentwise).
    """
    if samples < 1:
        raise UsageError("need at least one sample")
    xi = _annulus_sample(a.dim, samples, seed)
    jets = a.jets(xi, order=3)
    d_value = np.abs(np.einsum("si,si->s", jets.gradient, xi) - jets.value)
    d_value = np.max(d_value / jets.value)
    d_hess = np.max(np.abs(np.einsum("sij,si->sj", jets.hessian, xi)))
    d_third = np.max(np.abs(
        np.einsum("sijk,si->sjk", jets.third, xi) + jets.hessian))
    return EulerReport(
        passed=bool(d_value <= tol_value and d_hess <= tol_hessian
                    and d_third <= tol_third),
        max_value_defect=float(d_value),
        max_hessian_defect=float(d_hess),
        max_third_defect=float(d_third),
        samples=samples, seed=seed)


@dataclass(frozen=True)
class EquivalenceReport:
    passed: bool
    agreements: int
    samples: int
    min_lambda_full: float         # min over samples of lambda_min Hess(BoH)
    min_lambda_tangential: float   # same for HessH restricted to xi-perp
    disagreement_witness: np.ndarray | None


def check_convexity_equivalence(a: Anisotropy, profile: BProfile,
                                samples: int = 1000,
                                seed: int = 0) -> EquivalenceReport:
    """Positivity of Hess(B o H) versus tangential positivity of Hess H.

    For each sampled unit xi the verdict 'lambda_min of Hess(BoH)(xi) > 0'
    must agree with 'lambda_min of HessH(xi) restricted to the hyperplane
    orthogonal to xi > 0'.
    """
    if samples < 1:
        raise UsageError("need at least one sample")
    dirs = _sphere_sample(a.dim, samples, seed)
    full = hess_BH(a, profile, dirs)
    hj = a.jets(dirs, order=2)
    agree = 0
    min_full = np.inf
    min_tan = np.inf
    witness = None
    for s in range(samples):
        lam_full = jacobi_eigh(full[s])[0][0]
        frame = householder_frame(dirs[s])
        tan = frame[:, :-1]
        restricted = tan.T @ hj.hessian[s] @ tan
        lam_tan = jacobi_eigh(restricted)[0][0] if a.dim > 1 else np.inf
        min_full = min(min_full, lam_full)
        min_tan = min(min_tan, lam_tan)
        if (lam_full > 0.0) == (lam_tan > 0.0):
            agree += 1
        elif witness is None:
            witness = dirs[s]
    return EquivalenceReport(
        passed=agree == samples, agreements=agree, samples=samples,
        min_lambda_full=float(min_full), min_lambda_tangential=float(min_tan),
        disagreement_witness=witness)


@dataclass(frozen=True)
class AssumptionReport:
    holds_A: bool
    holds_B: bool
    p: float
    kappa: float
    gamma_est: float
    Gamma_est: float
    p_star: float
    K: float
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)


def _second_derivative_limits(a: Anisotropy, profile: BProfile,
                              agree_tol: float = 1e-6):
    """Radial limits of Hess(B o H) at the origin, tested per direction.

    Returns (limits_exist_and_agree, parity_ok, limit_matrix, info).
    Parity is the odd-gradient condition on H^2 at the basis directions
    that a twice differentiable composition forces.
    """
    n = a.dim
    dirs = [np.eye(n)[i] for i in range(n)]
    dirs += [-np.eye(n)[i] for i in range(n)]
    extra = _sphere_sample(n, 4, seed=7)
    dirs += [extra[i] for i in range(extra.shape[0])]
    steps = 2.0 ** -np.arange(3, 11, dtype=float)
    mats = []
    errs = []
    for d in dirs:
        pts = steps[:, None] * d[None, :]
        hs = hess_BH(a, profile, pts)
        lim = np.empty((n, n))
        err = 0.0
        for i in range(n):
            for j in range(n):
                res = richardson_limit(list(zip(steps, hs[:, i, j])))
                lim[i, j] = res.limit
                err = max(err, res.error_estimate)
        mats.append(lim)
        errs.append(err)
    mats = np.array(mats)
    mean = mats.mean(axis=0)
    scale = max(1.0, float(np.abs(mean).max()))
    spread = float(np.abs(mats - mean).max())
    est_err = float(max(errs))
    limits_ok = spread <= agree_tol * scale and est_err <= agree_tol * scale

    # parity of grad(H^2) at +/- basis vectors
    basis = np.eye(n)
    jp = a.jets(basis, order=1)
    jm = a.jets(-basis, order=1)
    gp = 2.0 * jp.value[:, None] * jp.gradient
    gm = 2.0 * jm.value[:, None] * jm.gradient
    parity_defect = float(np.abs(gp + gm).max())
    parity_ok = parity_defect <= 1e-9 * max(1.0, float(np.abs(gp).max()))
    info = {"limit_spread": spread, "richardson_error": est_err,
            "parity_defect": parity_defect}
    return limits_ok, parity_ok, mean, info


def certify_assumptions(a: Anisotropy, profile: BProfile, K: float = 10.0,
                        samples: int = 1000, seed: int = 0,
                        ratio_cap: float = 1e6) -> AssumptionReport:
    """Sampled certificates for the two ellipticity regimes.

    Power growth: over a low-discrepancy sample of the annulus
    2^-8 <= |xi| <= 2^8 (homogeneity covers the remaining scales),
    gamma_est = min lambda_min(Hess(BoH))/(kappa+|xi|)^(p-2) and
    Gamma_est = max sum|entries|/(kappa+|xi|)^(p-2); the regime is
    accepted when all sampled Hessians are positive definite and the
    normalized ratios stay within `ratio_cap` of each other.

    Uniform ellipticity on bounded gradients: requires the radial limits
    of Hess(BoH) at 0 to exist, agree across directions and form a
    positive definite matrix, the parity condition on H^2, and positive
    definiteness sampled on the ball |xi| <= K.

    Reports sampled certificates with witnesses, not proofs.
    """
    if not K > 0:
        raise UsageError("K must be positive")
    if samples < 1:
        raise UsageError("need at least one sample")
    p, kappa = profile.assumed_parameters
    if kappa >= 1.0 and profile.kind == "regularized-power":
        raise UsageError("regularization parameter must lie in [0, 1)")

    xi = _annulus_sample(a.dim, samples, seed)
    radii = np.linalg.norm(xi, axis=-1)
    hs = hess_BH(a, profile, xi)
    lam = np.empty(samples)
    abssum = np.empty(samples)
    for s in range(samples):
        lam[s] = jacobi_eigh(hs[s])[0][0]
        abssum[s] = np.abs(hs[s]).sum()
    denom = (kappa + radii) ** (p - 2.0)
    low = lam / denom
    high = abssum / denom
    i_low = int(np.argmin(low))
    i_high = int(np.argmax(high))
    gamma_a = float(low[i_low])
    big_gamma = float(high[i_high])
    holds_a = bool(lam.min() > 0.0 and gamma_a > 0.0
                   and big_gamma <= ratio_cap * gamma_a)

    limits_ok, parity_ok, limit_mat, info = \
        _second_derivative_limits(a, profile)
    lim_eigs = jacobi_eigh(limit_mat)[0]
    pd_ok = bool(lim_eigs[0] > 1e-8 * max(1.0, lim_eigs[-1]))
    ball = _annulus_sample(a.dim, samples, seed + 1,
                           lo_exp=-8.0, hi_exp=math.log2(K))
    hb = hess_BH(a, profile, ball)
    lam_ball = np.array([jacobi_eigh(hb[s])[0][0] for s in range(samples)])
    i_ball = int(np.argmin(lam_ball))
    gamma_ball = float(lam_ball[i_ball])
    holds_b = bool(limits_ok and parity_ok and pd_ok and gamma_ball > 0.0)

    if holds_a:
        gamma_est, big_est = gamma_a, big_gamma
        witnesses = [xi[i_low], xi[i_high]]
    else:
        gamma_est = gamma_ball
        big_est = float(np.abs(hb).sum(axis=(1, 2)).max())
        witnesses = [ball[i_ball], xi[i_high]]
    p_star = p if (holds_a and kappa == 0.0) else 2.0
    info.update({"gamma_annulus_normalized": gamma_a,
                 "Gamma_annulus_normalized": big_gamma,
                 "gamma_ball": gamma_ball,
                 "limit_matrix": limit_mat})
    return AssumptionReport(
        holds_A=holds_a, holds_B=holds_b, p=p, kappa=kappa,
        gamma_est=gamma_est, Gamma_est=big_est, p_star=float(p_star),
        K=float(K), witnesses=witnesses, details=info)


@dataclass(frozen=True)
class GaugeBound:
    epsilon: float
    p_star: float
    worst_t: float


def gauge_power_bound(profile: BProfile, anisotropy: Anisotropy | None = None,
                      m_cap: float = 10.0, grid: int = 2048) -> GaugeBound:
    """Largest sampled epsilon with b(t) >= epsilon * t^p_star on (0, m_cap].

    p_star is the profile exponent for an unregularized power profile and
    2 otherwise; for custom profiles it is estimated from the small-t
    slope of the gauge.  The anisotropy argument is accepted for symmetry
    with the certification interface but the bound depends on B only.
    """
    if not m_cap > 0:
        raise UsageError("m_cap must be positive")
    if profile.kind == "power":
        p_star = float(profile.p)
    elif profile.kind in ("regularized-power", "minimal-surface"):
        p_star = float(profile.p) if (profile.kind == "regularized-power"
                                      and profile.kappa == 0.0) else 2.0
    else:
        t0, t1 = 1e-5, 1e-4
        slope = (math.log(gauge_b(profile, t1)) -
                 math.log(gauge_b(profile, t0))) / math.log(t1 / t0)
        p_star = float(slope) if slope > 2.0 + 1e-3 else 2.0
    t = np.exp(np.linspace(math.log(m_cap) - 12.0 * math.log(10.0),
                           math.log(m_cap), grid))
    ratio = gauge_b(profile, t) / t ** p_star
    k = int(np.argmin(ratio))
    return GaugeBound(epsilon=float(ratio[k]), p_star=p_star,
                      worst_t=float(t[k]))


def quartic_form(a: Anisotropy, xi, c) -> tuple[float, float]:
    """The quartic contraction HessH:c:HessH:c and the tangential block.

    Returns (value, rigid_block_norm) where value =
    H_ij H_kl c_ik c_jl (nonnegative for convex H) and rigid_block_norm
    is the Frobenius norm of the leading (n-1)x(n-1) block of c in the
    deterministic orthonormal frame whose last axis is xi/|xi|.
    """
    xi = np.asarray(xi, dtype=float)
    c = np.asarray(c, dtype=float)
    hess = a.jets(xi, order=2).hessian
    value = float(np.einsum("ij,kl,ik,jl->", hess, hess, c, c))
    frame = householder_frame(xi)
    rotated = frame.T @ c @ frame
    block = rotated[:-1, :-1]
    return value, float(np.sqrt(np.sum(block * block)))


# ---------------------------------------------------------------------------
# sphere-graph construction and matrix characterization

@dataclass(frozen=True)
class SphereGraphReport:
    boundary_defect: float        # sup |H - 1| on the graph of 1/Theta
    curvature_infimum: float      # sampled infimum of principal curvatures
    meets_expected: bool
    expected_curvature: float
    growth_constant: float        # sampled constant in the power lower bound
    growth_exponent: float
    theta_min: float


def build_sphere_graph(theta: Callable, expected_curvature: float,
                       dim: int = 2, samples: int = 512, seed: int = 0,
                       power: float = 2.0,
                       label: str = "sphere-graph") -> tuple[Anisotropy,
                                                             SphereGraphReport]:
    """Construct a sphere-graph anisotropy and certify its convex body.

    The body is the region below the graph t -> t xi / Theta(xi) over the
    unit sphere; its boundary is exactly the level set {H = 1}.  The
    report samples that identity, the infimum of the principal curvatures
    of the boundary (via the second fundamental form assembled from
    HessH / |gradH|), and the constant of the power-growth lower bound of
    Hess(B o H) for B = power(p).

    Raises ConstructionError when Theta is not positive and
    CertificationError when the sampled curvature infimum is <= 0.
    """
    units = _sphere_sample(dim, samples, seed)
    vals = _theta_values(theta, units)
    if np.any(vals <= 0.0):
        raise ConstructionError("theta must be positive on the sphere")
    a = sphere_graph(theta, dim, curvature_bound=expected_curvature,
                     label=label)

    boundary = units / vals[:, None]
    jb = a.jets(boundary, order=2)
    boundary_defect = float(np.abs(jb.value - 1.0).max())

    curv_inf = np.inf
    for s in range(samples):
        grad = jb.gradient[s]
        gn = np.sqrt(np.sum(grad * grad))
        frame = householder_frame(grad)
        tan = frame[:, :-1]
        second_ff = tan.T @ jb.hessian[s] @ tan / gn
        curv_inf = min(curv_inf, jacobi_eigh(second_ff)[0][0]
                       if dim > 1 else np.inf)
    curv_inf = float(curv_inf)
    if curv_inf <= 0.0:
        raise CertificationError(
            f"sampled curvature infimum {curv_inf:.3e} is not positive; "
            "the body is not certified convex")

    bp = power_profile(power)
    rng = np.random.default_rng(seed)
    zeta = rng.standard_normal((samples, dim))
    zeta /= np.linalg.norm(zeta, axis=-1, keepdims=True)
    hs = hess_BH(a, bp, units)
    quad = np.einsum("sij,si,sj->s", hs, zeta, zeta)
    growth = float(quad.min())  # |xi| = |zeta| = 1 on the sample

    report = SphereGraphReport(
        boundary_defect=boundary_defect,
        curvature_infimum=curv_inf,
        meets_expected=bool(curv_inf >= expected_curvature - 1e-9),
        expected_curvature=float(expected_curvature),
        growth_constant=growth,
        growth_exponent=float(power),
        theta_min=float(vals.min()))
    return a, report


@dataclass(frozen=True)
class MatrixFormResult:
    matrix: np.ndarray | None
    candidate: np.ndarray
    max_defect: float
    witness: np.ndarray | None
    b2_at_zero: float
    limits_ok: bool
    parity_ok: bool

    @property
    def matched(self) -> bool:
        return self.matrix is not None


def characterize_matrix_form(a: Anisotropy, profile: BProfile,
                             tol: float = 1e-8,
                             samples: int = 720) -> MatrixFormResult:
    """Decide whether H is of quadratic (matrix) form.

    Recovers the candidate matrix as the Hessian of H^2/2 at a fixed
    reference direction and accepts it only when |H^2 - <M xi, xi>| stays
    within `tol` on a dense sphere sample and the radial limit tests of
    the composition at the origin (existence, directional agreement,
    parity of grad H^2) pass.  Also reports B''(0) recovered from the
    limit of the pure second derivative along the first axis divided by
    H(e_1)^2.
    """
    n = a.dim
    ref = np.array([1.0, 0.37, 0.73, 0.19][:n])
    ref /= np.linalg.norm(ref)
    jr = a.jets(ref, order=2)
    cand = np.outer(jr.gradient, jr.gradient) + jr.value * jr.hessian

    dirs = _sphere_sample(n, samples)
    diag = np.ones(n) / np.sqrt(n)
    dirs = np.vstack([dirs, diag, -diag])
    hvals = np.array([a.value(d) for d in dirs])
    quad = np.einsum("si,ij,sj->s", dirs, cand, dirs)
    defects = np.abs(hvals ** 2 - quad)
    k = int(np.argmax(defects))
    max_defect = float(defects[k])

    limits_ok, parity_ok, _, _ = _second_derivative_limits(a, profile)

    steps = 2.0 ** -np.arange(3, 11, dtype=float)
    e1 = np.eye(n)[0]
    hs = hess_BH(a, profile, steps[:, None] * e1[None, :])
    res = richardson_limit(list(zip(steps, hs[:, 0, 0])))
    b2_zero = res.limit / a.value(e1) ** 2

    matched = max_defect <= tol and limits_ok and parity_ok
    return MatrixFormResult(
        matrix=cand if matched else None,
        candidate=cand,
        max_defect=max_defect,
        witness=None if matched else dirs[k],
        b2_at_zero=float(b2_zero),
        limits_ok=limits_ok,
        parity_ok=parity_ok)
