"""Shared differentiation machinery.

Two routes are provided and kept strictly separate so they can certify
each other:

* exact jets (value, gradient, Hessian, third derivatives) of closed-form
  families via truncated Taylor arithmetic carried to order 3, and
* finite-difference stencils of formal order 2 or 4 for sampled grid
  fields.

Jet coefficients may be scalars or numpy arrays, so a single evaluation
can produce derivatives at many points at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, GridSizeError, UsageError
from .grid import DIRICHLET, PERIODIC, GridField

__all__ = [
    "Jet", "Jet3", "StencilSpec", "jet_seeds", "taylor_jet", "scalar_jet",
    "fd_derivatives", "richardson_limit", "RichardsonResult",
]


# ---------------------------------------------------------------------------
# truncated multivariate Taylor arithmetic

@lru_cache(maxsize=None)
def _tables(n: int, order: int):
    """Monomial list, index map and multiplication table for n variables
    truncated at total degree `order`."""
    monos = []
    def rec(prefix, remaining, budget):
        if remaining == 0:
            monos.append(tuple(prefix))
            return
        for d in range(budget + 1):
            rec(prefix + [d], remaining - 1, budget - d)
    rec([], n, order)
    monos.sort(key=lambda m: (sum(m), m))
    index = {m: i for i, m in enumerate(monos)}
    pairs = []
    for i, mi in enumerate(monos):
        for j, mj in enumerate(monos):
            if sum(mi) + sum(mj) <= order:
                k = index[tuple(a + b for a, b in zip(mi, mj))]
                pairs.append((i, j, k))
    return monos, index, tuple(pairs)


class Jet:
    """A truncated Taylor polynomial in `n` variables.

    Supports +, -, *, /, ** with other jets and scalars/arrays.  Real
    powers, exp, log, sin and cos are available for composing analytic
    families.
    """

    __slots__ = ("n", "order", "coef")

    def __init__(self, n: int, order: int, coef=None):
        self.n = n
        self.order = order
        if coef is None:
            m = len(_tables(n, order)[0])
            coef = [0.0] * m
        self.coef = coef

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value, n: int, order: int) -> "Jet":
        out = cls(n, order)
        out.coef[0] = value
        return out

    @classmethod
    def variable(cls, value, var: int, n: int, order: int) -> "Jet":
        out = cls(n, order)
        out.coef[0] = value
        e = tuple(1 if i == var else 0 for i in range(n))
        out.coef[_tables(n, order)[1][e]] = 1.0
        return out

    @property
    def value(self):
        return self.coef[0]

    def _zero_like(self) -> "Jet":
        return Jet(self.n, self.order)

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        out = Jet(self.n, self.order, list(self.coef))
        if isinstance(other, Jet):
            out.coef = [a + b for a, b in zip(self.coef, other.coef)]
        else:
            out.coef[0] = out.coef[0] + other
        return out

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.n, self.order, [-c if isinstance(c, np.ndarray) else -c
                                        for c in self.coef])

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.n, self.order,
                       [a - b for a, b in zip(self.coef, other.coef)])
        out = Jet(self.n, self.order, list(self.coef))
        out.coef[0] = out.coef[0] - other
        return out

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.n, self.order, [c * other for c in self.coef])
        pairs = _tables(self.n, self.order)[2]
        a, b = self.coef, other.coef
        out = [0.0] * len(a)
        for i, j, k in pairs:
            out[k] = out[k] + a[i] * b[j]
        return Jet(self.n, self.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        return Jet(self.n, self.order, [c / other for c in self.coef])

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    # -- analytic composition ------------------------------------------
    def _compose(self, derivs) -> "Jet":
        """Evaluate g(self) given derivatives of g at the constant term."""
        kmax = min(self.order, len(derivs) - 1)
        w = Jet(self.n, self.order, list(self.coef))
        w.coef[0] = self.coef[0] * 0.0  # keeps the batch shape
        acc = Jet.constant(derivs[kmax] / math.factorial(kmax),
                           self.n, self.order)
        for k in range(kmax - 1, -1, -1):
            acc = acc * w + derivs[k] / math.factorial(k)
        return acc

    def _require_positive(self, what: str):
        a0 = np.asarray(self.coef[0])
        if np.any(a0 <= 0.0):
            raise DomainError(f"{what} requires a positive argument")

    def _reciprocal(self) -> "Jet":
        a0 = self.coef[0]
        if np.any(np.asarray(a0) == 0.0):
            raise DomainError("division by a jet with zero value")
        derivs = [1.0 / a0]
        for k in range(1, self.order + 1):
            derivs.append(derivs[-1] * (-k) / a0)
        return self._compose(derivs)

    def __pow__(self, alpha):
        if isinstance(alpha, int) or (isinstance(alpha, float)
                                      and alpha == int(alpha) and alpha >= 0):
            k = int(alpha)
            out = Jet.constant(1.0, self.n, self.order)
            for _ in range(k):
                out = out * self
            return out
        self._require_positive("non-integer power")
        a0 = self.coef[0]
        derivs = [a0 ** alpha]
        fac = 1.0
        for k in range(1, self.order + 1):
            fac *= alpha - (k - 1)
            derivs.append(fac * a0 ** (alpha - k))
        return self._compose(derivs)

    def sqrt(self) -> "Jet":
        return self ** 0.5

    def exp(self) -> "Jet":
        e = np.exp(self.coef[0])
        return self._compose([e] * (self.order + 1))

    def log(self) -> "Jet":
        self._require_positive("log")
        a0 = self.coef[0]
        derivs = [np.log(a0), 1.0 / a0]
        for k in range(2, self.order + 1):
            derivs.append(derivs[-1] * (-(k - 1)) / a0)
        return self._compose(derivs)

    def sin(self) -> "Jet":
        a0 = self.coef[0]
        s, c = np.sin(a0), np.cos(a0)
        return self._compose([s, c, -s, -c][: self.order + 1])

    def cos(self) -> "Jet":
        a0 = self.coef[0]
        s, c = np.sin(a0), np.cos(a0)
        return self._compose([c, -s, -c, s][: self.order + 1])


def jet_seeds(x: np.ndarray, order: int = 3) -> list[Jet]:
    """Seed jets for the components of the evaluation point(s) `x`.

    `x` has shape (..., n); the trailing axis indexes the n variables and
    any leading axes form a batch carried through the arithmetic.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    seeds = []
    for i in range(n):
        xi = x[..., i]
        seeds.append(Jet.variable(xi if xi.ndim else float(xi), i, n, order))
    return seeds


@dataclass(frozen=True)
class Jet3:
    """Derivatives of a scalar quantity to third order.

    For a batch of b evaluation points in n variables the shapes are
    value (b,), gradient (b, n), hessian (b, n, n), third (b, n, n, n);
    without a batch the leading axis is absent.  `hessian` and `third`
    are filled symmetrically from single stored coefficients, so their
    symmetry is exact.  `third` is None when the jet was truncated at
    order 2.
    """

    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray | None
    third: np.ndarray | None

    @classmethod
    def from_jet(cls, jet: Jet) -> "Jet3":
        n, order = jet.n, jet.order
        _, index, _ = _tables(n, order)
        value = np.asarray(jet.coef[0], dtype=float)
        batch = value.shape

        def coef(mono):
            c = np.asarray(jet.coef[index[mono]], dtype=float)
            return np.broadcast_to(c, batch) if c.shape != batch else c

        def unit(i):
            return tuple(1 if a == i else 0 for a in range(n))

        grad = np.stack([coef(unit(i)) for i in range(n)], axis=-1)
        hess = None
        if order >= 2:
            hess = np.empty(batch + (n, n))
            for i in range(n):
                for j in range(i, n):
                    mono = tuple(a + b for a, b in zip(unit(i), unit(j)))
                    mult = 2.0 if i == j else 1.0
                    hess[..., i, j] = hess[..., j, i] = mult * coef(mono)
        third = None
        if order >= 3:
            third = np.empty(batch + (n, n, n))
            for i in range(n):
                for j in range(i, n):
                    for k in range(j, n):
                        mono = tuple(a + b + c for a, b, c in
                                     zip(unit(i), unit(j), unit(k)))
                        counts = [mono.count(3), mono.count(2)]
                        mult = 6.0 if counts[0] else (2.0 if counts[1] else 1.0)
                        val = mult * coef(mono)
                        for perm in {(i, j, k), (i, k, j), (j, i, k),
                                     (j, k, i), (k, i, j), (k, j, i)}:
                            third[(...,) + perm] = val
        return cls(value, grad, hess, third)


def taylor_jet(f: Callable, x, order: int = 3) -> Jet3:
    """Exact derivatives of an analytic family at `x` to the given order.

    `f` receives a single Jet when `x` is scalar, otherwise a list of
    seed jets (one per component of the trailing axis of `x`).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        seed = Jet.variable(float(x), 0, 1, order)
        return Jet3.from_jet(f(seed))
    seeds = jet_seeds(x, order)
    return Jet3.from_jet(f(seeds))


def scalar_jet(f: Callable, t, order: int = 3) -> Jet3:
    """Like `taylor_jet` for a one-variable family, allowing a batch of
    evaluation points `t` of any shape."""
    t = np.asarray(t, dtype=float)
    seed = Jet.variable(t if t.ndim else float(t), 0, 1, order)
    return Jet3.from_jet(f(seed))


# ---------------------------------------------------------------------------
# finite-difference stencils

@dataclass(frozen=True)
class StencilSpec:
    """Order (2 or 4) and sampling step, in units of grid cells."""

    order: int = 2
    step: float = 1.0

    def __post_init__(self):
        if self.order not in (2, 4):
            raise UsageError("stencil order must be 2 or 4")
        if not self.step > 0:
            raise UsageError("stencil step must be positive")
        if abs(self.step - round(self.step)) > 1e-12:
            raise UsageError("stencil step must be a whole number of cells")

    @property
    def stride(self) -> int:
        return int(round(self.step))


@lru_cache(maxsize=None)
def _fd_weights(offsets: tuple[float, ...], deriv: int) -> np.ndarray:
    """Stencil weights for the `deriv`-th derivative on the given offsets
    (in units of the spacing).  Solves the moment (Vandermonde) system."""
    pts = np.asarray(offsets, dtype=float)
    m = pts.size
    vand = np.vander(pts, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(vand, rhs)


def _shift(values: np.ndarray, offset: int, axis: int) -> np.ndarray:
    """Periodic shift so that index i picks up values at i + offset."""
    return np.roll(values, -offset, axis=axis)


def _diff_axis(values: np.ndarray, axis: int, h: float, bc: str,
               deriv: int, order: int, stride: int) -> np.ndarray:
    npts = values.shape[axis]
    radius = order // 2
    central = tuple(range(-radius, radius + 1))
    w_central = _fd_weights(central, deriv) / h ** deriv

    if bc == PERIODIC:
        out = np.zeros_like(values)
        for o, w in zip(central, w_central):
            out += w * _shift(values, o * stride, axis)
        return out

    out = np.empty_like(values)
    mv = np.moveaxis(values, axis, 0)
    mo = np.moveaxis(out, axis, 0)
    lo_edge = radius * stride
    hi_edge = npts - radius * stride
    if lo_edge < hi_edge:
        acc = np.zeros_like(mv[lo_edge:hi_edge])
        for o, w in zip(central, w_central):
            acc += w * mv[lo_edge + o * stride: npts - (radius - o) * stride]
        mo[lo_edge:hi_edge] = acc
    length = deriv + order  # one-sided stencil size of the same formal order
    for i in list(range(min(lo_edge, npts))) + \
            list(range(max(hi_edge, 0), npts)):
        max_neg = i // stride
        max_pos = (npts - 1 - i) // stride
        size = min(length, max_neg + max_pos + 1)
        lo = -min(max_neg, (size - 1) // 2)
        if lo + size - 1 > max_pos:
            lo = max_pos - (size - 1)
        offsets = tuple(o * stride for o in range(lo, lo + size))
        w = _fd_weights(offsets, deriv) / h ** deriv
        row = np.zeros_like(mv[0])
        for o, wo in zip(range(lo, lo + size), w):
            row += wo * mv[i + o * stride]
        mo[i] = row
    return out


def fd_derivatives(field: GridField, spec: StencilSpec):
    """Gradient and Hessian of a sampled field by central differences.

    Returns arrays of shape ``field.shape + (n,)`` and
    ``field.shape + (n, n)``.  Interior truncation error is
    O(h**spec.order) for smooth fields; periodic axes wrap and Dirichlet
    axes fall back to one-sided stencils of the same formal order at the
    boundary.  Mixed second derivatives apply the two one-dimensional
    first-derivative stencils in sequence, so the Hessian is symmetric by
    construction.
    """
    g = field.spec
    n = g.ndim
    stride = spec.stride
    for m, kind in zip(g.shape, g.bc):
        need = (spec.order + 1) * stride if kind == PERIODIC \
            else spec.order * stride + 1
        if m < need:
            raise GridSizeError(
                f"axis with {m} points is too small for an order-"
                f"{spec.order} stencil (needs {need})")
    h = g.spacing  # effective stencil spacing is h * stride
    u = field.values
    grad = np.empty(g.shape + (n,))
    first = []
    for a in range(n):
        da = _diff_axis(u, a, h[a] * stride, g.bc[a], 1, spec.order, stride)
        first.append(da)
        grad[..., a] = da
    hess = np.empty(g.shape + (n, n))
    for a in range(n):
        hess[..., a, a] = _diff_axis(u, a, h[a] * stride, g.bc[a], 2,
                                     spec.order, stride)
        for b in range(a + 1, n):
            mixed = _diff_axis(first[b], a, h[a] * stride, g.bc[a], 1,
                               spec.order, stride)
            hess[..., a, b] = mixed
            hess[..., b, a] = mixed
    return grad, hess


# ---------------------------------------------------------------------------
# limit extrapolation

class RichardsonResult(NamedTuple):
    limit: float
    error_estimate: float


def richardson_limit(samples: Sequence[tuple[float, float]]) -> RichardsonResult:
    """Extrapolate sampled values v(h) to h -> 0.

    `samples` are (step, value) pairs with positive, strictly decreasing
    steps (geometric decrease recommended).  Polynomial extrapolation in
    the step (Neville tableau evaluated at zero); the error estimate is
    the difference of the last two extrapolants.
    """
    pts = [(float(h), float(v)) for h, v in samples]
    if len(pts) < 3:
        raise UsageError("need at least 3 samples to extrapolate")
    steps = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    if np.any(steps <= 0) or np.any(np.diff(steps) >= 0):
        raise UsageError("steps must be positive and strictly decreasing")
    m = len(pts)
    tab = vals.copy()
    prev_best = tab[-1]
    for k in range(1, m):
        for i in range(m - 1, k - 1, -1):
            tab[i] = (steps[i - k] * tab[i] - steps[i] * tab[i - 1]) \
                / (steps[i - k] - steps[i])
        if k == m - 2:
            prev_best = tab[-1]
    return RichardsonResult(float(tab[-1]), float(abs(tab[-1] - prev_best)))
