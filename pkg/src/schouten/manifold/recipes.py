"""Named metric recipes and the analytic warping profiles behind them."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

RECIPES = ("flat", "round_sphere_warped", "hemisphere_warped", "perturbed")


@dataclass(frozen=True)
class WarpProfile:
    """phi(r) = slope * r + sum_j c_j sin(w_j r), with exact derivatives."""

    slope: float = 0.0
    coeffs: tuple = ()
    freqs: tuple = ()

    def derivative(self, r, order: int = 0) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if order == 0:
            out = out + self.slope * r
        elif order == 1:
            out = out + self.slope
        for c, w in zip(self.coeffs, self.freqs):
            # d^m/dr^m sin(w r) = w^m sin(w r + m pi/2)
            out = out + c * w**order * np.sin(w * r + order * pi / 2)
        return out

    def __call__(self, r) -> np.ndarray:
        return self.derivative(r, 0)

    def __add__(self, other: "WarpProfile") -> "WarpProfile":
        return WarpProfile(self.slope + other.slope, self.coeffs + other.coeffs, self.freqs + other.freqs)

    def scaled(self, a: float) -> "WarpProfile":
        return WarpProfile(a * self.slope, tuple(a * c for c in self.coeffs), self.freqs)

    def reflected(self, r_b: float) -> "ReflectedProfile":
        return ReflectedProfile(self, r_b)


@dataclass(frozen=True)
class ReflectedProfile:
    """Even extension of ``base`` across r = r_b (the doubled warped chart)."""

    base: WarpProfile
    r_b: float

    def derivative(self, r, order: int = 0) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        mirrored = r > self.r_b
        rr = np.where(mirrored, 2 * self.r_b - r, r)
        sign = np.where(mirrored, (-1.0) ** order, 1.0)
        return sign * self.base.derivative(rr, order)

    def __call__(self, r) -> np.ndarray:
        return self.derivative(r, 0)


SIN = WarpProfile(coeffs=(1.0,), freqs=(1.0,))
LINEAR = WarpProfile(slope=1.0)


def bump_profile(mode: int) -> WarpProfile:
    """sin^3(r) cos^2(m r) as a finite sine series.

    Odd about r = 0 with vanishing first derivative there (keeps the pole
    smooth with phi'(0) = 1) and even about r = pi/2 (keeps the equator
    totally geodesic).
    """
    m = int(mode)
    coeffs = (3 / 8, -1 / 8, 3 / 16, 3 / 16, -1 / 16, -1 / 16)
    freqs = (1.0, 3.0, 1.0 + 2 * m, 1.0 - 2 * m, 3.0 + 2 * m, 3.0 - 2 * m)
    return WarpProfile(coeffs=coeffs, freqs=freqs)


@dataclass(frozen=True)
class MetricRecipe:
    """A named metric construction.

    ``perturbed`` wraps ``base`` (another recipe name) with a perturbation of
    size ``amplitude`` and wave number ``mode``. ``r_max`` overrides the
    default radial extent of warped recipes.
    """

    name: str
    base: str | None = None
    amplitude: float = 0.0
    mode: int = 1
    r_max: float | None = None
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.name not in RECIPES:
            raise ValueError(f"unknown recipe {self.name!r}; expected one of {RECIPES}")
        if self.name == "perturbed":
            if self.base is None or self.base == "perturbed":
                raise ValueError("perturbed recipe needs a non-perturbed base recipe")
            if self.base not in RECIPES:
                raise ValueError(f"unknown base recipe {self.base!r}")

    @property
    def root(self) -> str:
        return self.base if self.name == "perturbed" else self.name

    @property
    def is_warped(self) -> bool:
        return self.root in ("round_sphere_warped", "hemisphere_warped")

    def default_radial_range(self) -> tuple:
        if self.root == "round_sphere_warped":
            return 0.0, self.r_max if self.r_max is not None else pi
        if self.root == "hemisphere_warped":
            return 0.0, self.r_max if self.r_max is not None else pi / 2
        return 0.0, self.r_max if self.r_max is not None else 1.0

    def profile(self) -> WarpProfile:
        base = LINEAR if self.root == "flat" else SIN
        if self.name == "perturbed" and self.amplitude != 0.0:
            return base + bump_profile(self.mode).scaled(self.amplitude)
        return base

    def to_dict(self) -> dict:
        out = {"name": self.name}
        if self.name == "perturbed":
            out.update(base=self.base, amplitude=self.amplitude, mode=self.mode)
        if self.r_max is not None:
            out["r_max"] = self.r_max
        return out


def grid_metric_components(chart, recipe: MetricRecipe) -> np.ndarray:
    """g_ij at every node of a torus or slab chart, shape ``chart.shape + (n, n)``.

    The slab perturbation touches only the tangential block and depends on
    the normal coordinate through cos(pi m x_n / L), so the metric stays in
    Fermi form with zero normal derivative on both faces.
    """
    n = chart.n
    g = np.broadcast_to(np.eye(n), chart.shape + (n, n)).copy()
    if recipe.name != "perturbed" or recipe.amplitude == 0.0:
        return g
    a, m = recipe.amplitude, recipe.mode
    x = chart.coordinates()
    if chart.backend == "torus":
        k = 2 * pi * m / chart.length
        for i in range(n):
            g[..., i, i] += a * np.sin(k * x[(i + 1) % n])
        off = 0.5 * a * np.cos(k * x[2 % n])
        g[..., 0, 1] += off
        g[..., 1, 0] += off
        return g
    nax = chart.boundary_axis
    tang = [ax for ax in range(n) if ax != nax]
    normal = np.cos(pi * m * x[nax] / chart.extent(nax))
    k = 2 * pi * m / chart.length
    for idx, ax in enumerate(tang):
        other = tang[(idx + 1) % len(tang)]
        g[..., ax, ax] += a * normal * (0.5 + 0.5 * np.sin(k * x[other]))
    off = 0.25 * a * normal * np.cos(k * x[tang[0]])
    g[..., tang[0], tang[1]] += off
    g[..., tang[1], tang[0]] += off
    return g
