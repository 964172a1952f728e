"""Structured charts: periodic torus, Neumann slab and 1-D warped-product radius."""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi

import numpy as np

BACKENDS = ("torus", "slab", "warped")
MIN_RESOLUTION = 8


def sphere_area(m: int) -> float:
    """Area of the unit round sphere S^m."""
    return 2.0 * pi ** ((m + 1) / 2.0) / gamma((m + 1) / 2.0)


@dataclass(frozen=True)
class GridChart:
    """A structured grid.

    torus
        ``n`` periodic axes of length ``length``; ``resolution`` nodes per axis.
    slab
        like the torus except ``boundary_axis``, which runs over [0, length]
        with nodes on both faces (Fermi normal coordinate of a totally
        geodesic boundary).
    warped
        a single radial axis on [r_min, r_max] (nodes on both ends) for
        metrics dr^2 + phi(r)^2 g_{S^{n-1}} and radial fields.
    """

    backend: str
    n: int
    resolution: tuple
    spacing: tuple
    boundary_axis: int | None = None
    r_min: float = 0.0
    r_max: float = 0.0
    length: float = 1.0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.n < 3:
            raise ValueError("dimension n must be >= 3")
        if min(self.resolution) < MIN_RESOLUTION:
            raise ValueError(f"resolution must be >= {MIN_RESOLUTION} per axis")
        if min(self.spacing) <= 0:
            raise ValueError("spacing must be positive")

    # constructors --------------------------------------------------------

    @classmethod
    def torus(cls, n: int, resolution: int, length: float = 1.0) -> "GridChart":
        return cls("torus", n, (resolution,) * n, (length / resolution,) * n, length=length)

    @classmethod
    def slab(cls, n: int, resolution: int, length: float = 1.0, boundary_axis: int | None = None) -> "GridChart":
        axis = n - 1 if boundary_axis is None else boundary_axis
        spacing = tuple(length / (resolution - 1) if a == axis else length / resolution for a in range(n))
        return cls("slab", n, (resolution,) * n, spacing, boundary_axis=axis, length=length)

    @classmethod
    def warped(cls, n: int, resolution: int, r_min: float, r_max: float) -> "GridChart":
        if r_max <= r_min:
            raise ValueError("need r_max > r_min")
        return cls("warped", n, (resolution,), ((r_max - r_min) / (resolution - 1),),
                   r_min=r_min, r_max=r_max)

    # geometry ------------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return tuple(self.resolution)

    @property
    def size(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def ndim(self) -> int:
        """Number of array axes (1 for the warped backend)."""
        return len(self.resolution)

    @property
    def h(self) -> float:
        """Largest grid step, the h in error statements."""
        return max(self.spacing)

    def periodic(self, axis: int) -> bool:
        if self.backend == "torus":
            return True
        if self.backend == "slab":
            return axis != self.boundary_axis
        return False

    def axis_coordinates(self, axis: int) -> np.ndarray:
        if self.backend == "warped":
            return np.linspace(self.r_min, self.r_max, self.resolution[0])
        return np.arange(self.resolution[axis]) * self.spacing[axis]

    def coordinates(self) -> list:
        """Coordinate arrays, one per chart axis, each of shape ``self.shape``."""
        return np.meshgrid(*[self.axis_coordinates(a) for a in range(self.ndim)], indexing="ij")

    @property
    def radii(self) -> np.ndarray:
        return self.axis_coordinates(0)

    def axis_index(self, axis: int, offset: int) -> np.ndarray:
        """Neighbour index along ``axis`` at ``offset``: periodic wrap or even reflection.

        Reflection puts the ghost node -j onto j and N-1+j onto N-1-j, the
        discrete form of a homogeneous Neumann condition (and of pole
        regularity on the warped backend).
        """
        size = self.resolution[axis]
        j = np.arange(size) + offset
        if self.periodic(axis):
            return j % size
        period = 2 * (size - 1)
        j = np.mod(j, period)
        return np.where(j > size - 1, period - j, j)

    def shift(self, arr: np.ndarray, axis: int, offset: int) -> np.ndarray:
        """``arr`` evaluated at the neighbour ``offset`` steps along ``axis``."""
        return np.take(arr, self.axis_index(axis, offset), axis=axis)

    def trapezoid_weights(self, axis: int) -> np.ndarray:
        w = np.full(self.resolution[axis], self.spacing[axis])
        if not self.periodic(axis):
            w[0] *= 0.5
            w[-1] *= 0.5
        return w

    def cell_weights(self) -> np.ndarray:
        """Coordinate cell volumes (trapezoid rule on non-periodic axes)."""
        w = np.ones(self.shape)
        for a in range(self.ndim):
            shape = [1] * self.ndim
            shape[a] = -1
            w = w * self.trapezoid_weights(a).reshape(shape)
        return w

    def extent(self, axis: int) -> float:
        if self.backend == "warped":
            return self.r_max - self.r_min
        if self.periodic(axis):
            return self.resolution[axis] * self.spacing[axis]
        return (self.resolution[axis] - 1) * self.spacing[axis]

    def injectivity_radius(self) -> float:
        """Largest radius for which chart distances are unambiguous."""
        if self.backend == "warped":
            return self.extent(0)
        # slab normal direction is measured on the doubled (period 2L) chart
        return min(0.5 * self.extent(a) * (2 if not self.periodic(a) else 1) for a in range(self.ndim))

    def distances(self, center) -> np.ndarray:
        """Distance from node ``center`` to every node.

        torus: flat distance with wrap-around. slab: distance on the doubled
        chart (min over the point and its mirror images). warped: radial
        separation |r - r_c|, which is the distance from the centre sphere
        to each radial node.
        """
        center = tuple(np.atleast_1d(center))
        coords = self.coordinates()
        if self.backend == "warped":
            return np.abs(coords[0] - self.radii[center[0]])
        d2 = np.zeros(self.shape)
        for a in range(self.ndim):
            x = coords[a]
            c = self.axis_coordinates(a)[center[a]]
            if self.periodic(a):
                period = self.extent(a)
                dx = np.abs(x - c) % period
                dx = np.minimum(dx, period - dx)
            else:
                length = self.extent(a)
                # images of c under reflection in both faces on the 2L-periodic double
                images = np.array([c, -c, 2 * length - c])
                dx = np.min(np.abs(x[..., None] - images), axis=-1)
            d2 = d2 + dx**2
        return np.sqrt(d2)
