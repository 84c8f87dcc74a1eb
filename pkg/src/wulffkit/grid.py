"""Rectangular grids and sampled scalar fields.

Nodes of a Dirichlet axis include both interval endpoints, so the spacing
is extent/(points-1).  Nodes of a periodic axis exclude the right endpoint,
so the spacing is extent/points and index arithmetic wraps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

DIRICHLET = "dirichlet"
PERIODIC = "periodic"


@dataclass(frozen=True)
class GridSpec:
    """Geometry and boundary metadata of a rectangular grid."""

    shape: tuple[int, ...]
    extents: tuple[tuple[float, float], ...]
    bc: tuple[str, ...]

    def __post_init__(self):
        n = len(self.shape)
        if not 1 <= n <= 3:
            raise UsageError(f"grid dimension must be 1, 2 or 3, got {n}")
        if len(self.extents) != n or len(self.bc) != n:
            raise UsageError("shape, extents and bc must have equal length")
        for m in self.shape:
            if m < 2:
                raise UsageError("each axis needs at least 2 points")
        for lo, hi in self.extents:
            if not hi > lo:
                raise UsageError("extents must be increasing intervals")
        for kind in self.bc:
            if kind not in (DIRICHLET, PERIODIC):
                raise UsageError(f"unknown boundary condition {kind!r}")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        out = []
        for m, (lo, hi), kind in zip(self.shape, self.extents, self.bc):
            length = hi - lo
            out.append(length / m if kind == PERIODIC else length / (m - 1))
        return tuple(out)

    def axis_coords(self, axis: int) -> np.ndarray:
        lo, hi = self.extents[axis]
        m = self.shape[axis]
        if self.bc[axis] == PERIODIC:
            h = (hi - lo) / m
            return lo + h * np.arange(m)
        return np.linspace(lo, hi, m)

    def coords(self) -> list[np.ndarray]:
        """Node coordinates as broadcastable meshgrid arrays (ij indexing)."""
        axes = [self.axis_coords(a) for a in range(self.ndim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> np.ndarray:
        """All node coordinates, flattened to shape (nnodes, ndim)."""
        mesh = self.coords()
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def node_weights(self) -> np.ndarray:
        """Quadrature weight (volume) attached to each node.

        Trapezoid weights on Dirichlet axes, uniform on periodic axes.
        """
        w = np.ones(self.shape)
        for a, (h, kind) in enumerate(zip(self.spacing, self.bc)):
            wa = np.full(self.shape[a], h)
            if kind == DIRICHLET:
                wa[0] = wa[-1] = h / 2
            sl = [None] * self.ndim
            sl[a] = slice(None)
            w = w * wa[tuple(sl)]
        return w

    def collar_mask(self, width: int) -> np.ndarray:
        """True on nodes within `width` cells of a non-periodic boundary."""
        mask = np.zeros(self.shape, dtype=bool)
        for a, kind in enumerate(self.bc):
            if kind == PERIODIC:
                continue
            sl = [slice(None)] * self.ndim
            sl[a] = slice(0, width)
            mask[tuple(sl)] = True
            sl[a] = slice(self.shape[a] - width, self.shape[a])
            mask[tuple(sl)] = True
        return mask

    def interior_mask(self) -> np.ndarray:
        """True on nodes that are not on a Dirichlet boundary."""
        return ~self.collar_mask(1)


@dataclass
class GridField:
    """A scalar field sampled on a grid."""

    spec: GridSpec
    values: np.ndarray
    interp_error_estimate: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.spec.shape:
            raise UsageError(
                f"field shape {self.values.shape} does not match grid "
                f"shape {self.spec.shape}"
            )

    @property
    def ndim(self) -> int:
        return self.spec.ndim

    def copy(self) -> "GridField":
        return GridField(self.spec, self.values.copy(),
                         self.interp_error_estimate, dict(self.meta))


def box(shape: tuple[int, ...] | int,
        extents,
        bc: str | tuple[str, ...] = DIRICHLET) -> GridSpec:
    """Convenience constructor for a GridSpec.

    `shape` may be a single int (replicated), `extents` a single (lo, hi)
    pair or one per axis, `bc` a single kind or one per axis.
    """
    if isinstance(shape, int):
        shape = (shape,)
    n = len(shape)
    extents = tuple(extents)
    if len(extents) == 2 and np.isscalar(extents[0]):
        extents = (tuple(extents),) * n
    else:
        extents = tuple(tuple(e) for e in extents)
    if isinstance(bc, str):
        bc = (bc,) * n
    return GridSpec(tuple(shape), extents, tuple(bc))
