"""Even reflection of fields and metrics across boundary faces.

A slab with Neumann faces at x_n = 0 and x_n = L doubles to a chart that is
periodic in x_n with period 2L; a warped chart whose far end r_max is a
boundary sphere doubles to [r_min, 2 r_max - r_min]. The ghost layers used
by the stencils are exactly this reflection, so a discrete solution on the
original chart restricts from a discrete solution on the double.
"""

from __future__ import annotations

import numpy as np

from .charts import GridChart
from .metric import MetricField, POLE_TOL

DEFAULT_NEUMANN_TOL = 1e-2
_ONE_SIDED = np.array([-25.0, 48.0, -36.0, 16.0, -3.0])


class NeumannViolation(ValueError):
    """Non-zero discrete normal derivative on a boundary face."""

    def __init__(self, message: str, max_violation: float):
        super().__init__(message)
        self.max_violation = max_violation


def _normal_axis(chart: GridChart) -> int:
    if chart.backend == "slab":
        return chart.boundary_axis
    if chart.backend == "warped":
        return 0
    raise ValueError("only slab and warped charts have boundary faces")


def _boundary_ends(chart: GridChart, phi=None) -> tuple:
    """Which ends of the normal axis are boundary faces (not poles)."""
    if chart.backend == "slab":
        return (0, -1)
    ends = []
    for end in (0, -1):
        if phi is None or abs(phi[end]) >= POLE_TOL:
            ends.append(end)
    return tuple(ends)


def normal_derivatives(chart: GridChart, field, ends=None) -> dict:
    """One-sided fourth-order normal differences at the boundary faces.

    (-25 u_0 + 48 u_1 - 36 u_2 + 16 u_3 - 3 u_4)/(12 h) at the low face and
    the mirrored formula at the high face, with the outward sign dropped.
    Fourth order keeps the truncation error of smooth even fields well
    below the default tolerance on coarse grids.
    """
    ax = _normal_axis(chart)
    h = chart.spacing[ax]
    v = np.moveaxis(np.asarray(field, dtype=float), ax, 0)
    ends = (0, -1) if ends is None else ends
    out = {}
    if 0 in ends:
        out[0] = np.tensordot(_ONE_SIDED, v[:5], axes=1) / (12 * h)
    if -1 in ends:
        out[-1] = -np.tensordot(_ONE_SIDED, v[::-1][:5], axes=1) / (12 * h)
    return out


def check_neumann(chart: GridChart, field, tol: float = DEFAULT_NEUMANN_TOL, ends=None) -> float:
    """Largest |normal difference| on the boundary faces; raises above ``tol``.

    Charts without faces (torus) return 0.
    """
    if chart.backend == "torus":
        return 0.0
    data = normal_derivatives(chart, field, ends)
    worst = max((float(np.abs(d).max()) for d in data.values()), default=0.0)
    if worst > tol:
        raise NeumannViolation(f"normal derivative {worst:.3e} on a boundary face exceeds {tol:.1e}", worst)
    return worst


def doubled_chart(chart: GridChart) -> GridChart:
    """Chart of the double: 2(N-1) periodic normal nodes (slab) or 2N-1 radial nodes (warped)."""
    if chart.backend == "slab":
        ax = chart.boundary_axis
        res = list(chart.resolution)
        res[ax] = 2 * (chart.resolution[ax] - 1)
        return GridChart("torus", chart.n, tuple(res), chart.spacing, length=chart.length)
    if chart.backend == "warped":
        r_new = 2 * chart.r_max - chart.r_min
        return GridChart.warped(chart.n, 2 * chart.resolution[0] - 1, chart.r_min, r_new)
    raise ValueError("only slab and warped charts can be doubled")


def _mirror_index(chart: GridChart) -> np.ndarray:
    size = chart.resolution[_normal_axis(chart)]
    if chart.backend == "slab":
        return np.concatenate([np.arange(size), np.arange(size - 2, 0, -1)])
    return np.concatenate([np.arange(size), np.arange(size - 2, -1, -1)])


def double(field, chart: GridChart, tol: float | None = DEFAULT_NEUMANN_TOL, phi=None):
    """Even extension of ``field`` across the boundary faces.

    Returns ``(doubled_field, doubled_chart)``. The restriction of the
    output to the original nodes is the input, bit for bit. ``tol`` bounds
    the one-sided normal derivative checked beforehand (None skips it);
    ``phi`` lets warped charts skip ends that are poles.
    """
    field = np.asarray(field, dtype=float)
    if field.shape[: chart.ndim] != chart.shape:
        raise ValueError(f"field shape {field.shape} does not match chart {chart.shape}")
    if chart.backend == "warped":
        if phi is not None and abs(phi[-1]) < POLE_TOL:
            raise ValueError("the far end of the warped chart is a pole, not a boundary")
    if tol is not None:
        check_neumann(chart, field, tol, ends=(-1,) if chart.backend == "warped" else None)
    out = np.take(field, _mirror_index(chart), axis=_normal_axis(chart))
    return out, doubled_chart(chart)


def double_metric(metric: MetricField) -> MetricField:
    """The evenly reflected metric on the doubled chart."""
    chart = metric.chart
    if metric.warped:
        if metric.pole_mask[-1]:
            raise ValueError("the far end of the warped chart is a pole, not a boundary")
        return MetricField(doubled_chart(chart), metric.recipe, profile=metric.profile.reflected(chart.r_max),
                           sphere_curvature=metric.sphere_curvature)
    g, new_chart = double(metric.g, chart, tol=None)
    return MetricField(new_chart, metric.recipe, g=g)


def interface_diagnostics(doubled, original: GridChart) -> dict:
    """Seam regularity of a doubled field.

    ``first_difference``: max |central first normal difference| at the seam
    nodes (zero by construction). ``second_mismatch``: max difference
    between the central second difference across the seam and the
    one-sided second-order second difference from the original side.
    """
    ax = _normal_axis(original)
    h = original.spacing[ax]
    size = original.resolution[ax]
    v = np.moveaxis(np.asarray(doubled, dtype=float), ax, 0)
    total = v.shape[0]
    seams = [size - 1] if original.backend == "warped" else [0, size - 1]
    first, mismatch = 0.0, 0.0
    for s in seams:
        plus, minus = v[(s + 1) % total], v[(s - 1) % total]
        first = max(first, float(np.abs(plus - minus).max()) / (2 * h))
        central = (plus - 2 * v[s] + minus) / h**2
        step = -1 if s == size - 1 else 1  # walk into the original half
        side = [v[s + step * j] for j in range(4)]
        one_sided = (2 * side[0] - 5 * side[1] + 4 * side[2] - side[3]) / h**2
        mismatch = max(mismatch, float(np.abs(central - one_sided).max()))
    return {"first_difference": first, "second_mismatch": mismatch, "h": h}
