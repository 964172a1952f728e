"""Discrete metrics on the structured charts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import GridChart, sphere_area
from .recipes import MetricRecipe, grid_metric_components

POLE_TOL = 1e-12


class DegenerateMetricError(ValueError):
    """The metric fails to be positive definite at some node."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


@dataclass
class MetricField:
    """A Riemannian metric sampled on a chart.

    Grid backends store the full tensor ``g`` (``chart.shape + (n, n)``).
    The warped backend stores the warping profile; there the metric is
    dr^2 + phi(r)^2 g_{S^{n-1}}, with unit round sphere factor, and all
    tensors are expressed in the orthonormal frame (radial, tangential...).
    """

    chart: GridChart
    recipe: MetricRecipe | None = None
    g: np.ndarray | None = None
    profile: object | None = None
    sphere_curvature: float = 1.0

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def warped(self) -> bool:
        return self.chart.backend == "warped"

    # warped profile samples ---------------------------------------------

    def phi(self, order: int = 0) -> np.ndarray:
        return self.profile.derivative(self.chart.radii, order)

    @property
    def pole_mask(self) -> np.ndarray:
        mask = np.zeros(self.chart.shape, dtype=bool)
        if self.warped:
            phi = self.phi()
            mask[0] = abs(phi[0]) < POLE_TOL
            mask[-1] = abs(phi[-1]) < POLE_TOL
        return mask

    # tensors -------------------------------------------------------------

    def tensor(self) -> np.ndarray:
        """g_ij per node (identity in the orthonormal frame on the warped backend)."""
        if self.warped:
            return np.broadcast_to(np.eye(self.n), self.chart.shape + (self.n, self.n))
        return self.g

    def inverse(self) -> np.ndarray:
        if self.warped:
            return self.tensor()
        return np.linalg.inv(self.g)

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.tensor())
        except np.linalg.LinAlgError:
            node = _first_non_spd(self.tensor())
            raise DegenerateMetricError(f"metric not positive definite at node {node}", node) from None

    def volume_weights(self) -> np.ndarray:
        """Quadrature weight dV at each node (trapezoid-consistent)."""
        cell = self.chart.cell_weights()
        if self.warped:
            return cell * np.abs(self.phi()) ** (self.n - 1) * sphere_area(self.n - 1)
        return cell * np.sqrt(np.linalg.det(self.g))

    def volume(self) -> float:
        return float(self.volume_weights().sum())

    def integrate(self, values) -> float:
        return float(np.sum(self.volume_weights() * values))


def _first_non_spd(g: np.ndarray):
    flat = g.reshape(-1, g.shape[-2], g.shape[-1])
    eig_min = np.linalg.eigvalsh(flat).min(axis=-1)
    bad = int(np.argmax(eig_min <= 0)) if np.any(eig_min <= 0) else int(np.argmin(eig_min))
    return tuple(int(i) for i in np.unravel_index(bad, g.shape[:-2]))


def warped_chart(recipe: MetricRecipe, n: int, resolution: int) -> GridChart:
    """Radial chart spanning the recipe's default range."""
    r_min, r_max = recipe.default_radial_range()
    return GridChart.warped(n, resolution, r_min, r_max)


def build_metric(chart: GridChart, recipe: MetricRecipe) -> MetricField:
    """Build and validate the metric ``recipe`` on ``chart``.

    Warped recipes need a warped chart; the flat recipe works on every
    backend (phi(r) = r on the warped one); ``perturbed`` follows its base.
    """
    if recipe.is_warped and chart.backend != "warped":
        raise ValueError(f"recipe {recipe.name}/{recipe.root} needs a warped chart, got {chart.backend}")
    if chart.backend == "warped":
        metric = MetricField(chart, recipe, profile=recipe.profile())
        _validate_warped(metric)
        return metric
    if recipe.root != "flat":
        raise ValueError(f"recipe {recipe.root} is not available on a {chart.backend} chart")
    metric = MetricField(chart, recipe, g=grid_metric_components(chart, recipe))
    metric.cholesky()
    if chart.backend == "slab":
        _validate_fermi(metric)
    return metric


def _validate_warped(metric: MetricField) -> None:
    phi = metric.phi()
    dphi = metric.phi(1)
    interior = phi[1:-1]
    if np.any(interior <= 0):
        bad = int(np.argmax(phi[1:-1] <= 0)) + 1
        raise DegenerateMetricError(f"warping function not positive at node {bad}", (bad,))
    for end in (0, -1):
        if abs(phi[end]) < POLE_TOL:
            if abs(abs(dphi[end]) - 1.0) > 1e-9:
                raise DegenerateMetricError(
                    f"pole at r={metric.chart.radii[end]:g} is singular: |phi'| = {abs(dphi[end]):g} != 1",
                    (end % len(phi),))
        elif phi[end] < 0:
            raise DegenerateMetricError("warping function negative at chart end", (end % len(phi),))
    if metric.chart.r_min == 0.0 and abs(phi[0]) >= POLE_TOL:
        raise DegenerateMetricError("r_min = 0 must be a pole (phi(0) = 0)", (0,))


def _validate_fermi(metric: MetricField) -> None:
    """Slab metrics must read g = g_ab dx^a dx^b + (dx^n)^2 (Fermi coordinates)."""
    ax = metric.chart.boundary_axis
    g = metric.g
    others = [i for i in range(metric.n) if i != ax]
    if np.any(g[..., ax, ax] != 1.0) or np.any(g[..., ax, others] != 0):
        raise ValueError("slab metric is not in Fermi form (g_nn = 1, g_an = 0)")


def is_totally_geodesic_end(metric: MetricField, end: int, tol: float = 1e-12) -> bool:
    """Second fundamental form of the warped boundary sphere is phi'/phi; zero iff phi' = 0."""
    return abs(float(metric.phi(1)[end])) <= tol

