"""Potential nonlinearities and their gauge constant.

The gauge constant ``c_u`` of a potential F over a range [lo, hi] is the
supremum of F on that range.  The effective potential F - c_u is then
non-positive on any field whose values stay in the range.  Shifting F by
an additive constant is represented symbolically (the `offset` field), so
that gauge deficits c_u - F(u) cancel the shift exactly, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .calculus import scalar_jet
from .errors import UsageError

_GAUGE_SCAN = 100_001


@dataclass(frozen=True, eq=False)
class Potential:
    """A nonlinearity F with derivatives and an optional gauge constant."""

    kind: str
    coeffs: tuple[float, ...] = ()
    fn: Callable | None = None
    offset: float = 0.0
    cu_base: float | None = None

    # -- evaluation -----------------------------------------------------
    def _base(self, u, deriv: int):
        u = np.asarray(u, dtype=float)
        if self.kind == "allen-cahn":
            # F(u) = -(1 - u^2)^2 / 4
            if deriv == 0:
                return -(1.0 - u * u) ** 2 / 4.0
            if deriv == 1:
                return u - u ** 3
            return 1.0 - 3.0 * u * u
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "poly":
            c = npoly.polyder(np.asarray(self.coeffs), deriv) if deriv \
                else np.asarray(self.coeffs)
            return npoly.polyval(u, c)
        if self.kind == "custom":
            jet = scalar_jet(self.fn, u, order=2)
            return (jet.value, jet.gradient[..., 0],
                    jet.hessian[..., 0, 0])[deriv]
        raise UsageError(f"unknown potential kind {self.kind!r}")

    def value(self, u):
        return self._base(u, 0) + self.offset

    def d1(self, u):
        return self._base(u, 1)

    def d2(self, u):
        return self._base(u, 2)

    # -- gauge ----------------------------------------------------------
    def gauged(self, lo: float, hi: float,
               samples: int = _GAUGE_SCAN) -> "Potential":
        """Attach the gauge constant computed by a dense scan of F over
        [lo, hi] (endpoints included)."""
        if hi < lo:
            raise UsageError("range must satisfy lo <= hi")
        grid = np.linspace(lo, hi, samples) if hi > lo else np.array([lo])
        return replace(self, cu_base=float(np.max(self._base(grid, 0))))

    @property
    def c_u(self) -> float:
        if self.cu_base is None:
            raise UsageError("potential gauge is not set; call gauged()")
        return self.cu_base + self.offset

    def deficit(self, u):
        """c_u - F(u).  The additive offset cancels exactly."""
        if self.cu_base is None:
            raise UsageError("potential gauge is not set; call gauged()")
        return self.cu_base - self._base(u, 0)

    def shifted(self, constant: float) -> "Potential":
        """The potential F + constant (gauge shifts along with it)."""
        return replace(self, offset=self.offset + float(constant))


def allen_cahn() -> Potential:
    """Double-well potential -(1 - u^2)^2 / 4 with wells at u = +/-1."""
    return Potential("allen-cahn")


def zero_potential() -> Potential:
    return Potential("zero")


def poly_potential(coeffs) -> Potential:
    """Polynomial potential with ascending coefficients (c0 + c1 u + ...)."""
    return Potential("poly", coeffs=tuple(float(c) for c in coeffs))


def custom_potential(fn: Callable) -> Potential:
    """Potential from an analytic callable acting on jets."""
    return Potential("custom", fn=fn)
