"""Second-order central differences on a chart, as array ops and as sparse stencils.

Fields carry the chart axes first; any trailing axes are carried along.
Ghost values come from :meth:`GridChart.axis_index` (periodic wrap or even
reflection), so the array form and the sparse form see the same stencil.
"""

from __future__ import annotations

import numpy as np


def d1(chart, arr: np.ndarray, axis: int) -> np.ndarray:
    h = chart.spacing[axis]
    return (chart.shift(arr, axis, 1) - chart.shift(arr, axis, -1)) / (2 * h)


def d2(chart, arr: np.ndarray, axis: int) -> np.ndarray:
    h = chart.spacing[axis]
    return (chart.shift(arr, axis, 1) - 2 * arr + chart.shift(arr, axis, -1)) / (h * h)


def dmix(chart, arr: np.ndarray, a: int, b: int) -> np.ndarray:
    pa, ma = chart.shift(arr, a, 1), chart.shift(arr, a, -1)
    diff = (chart.shift(pa, b, 1) - chart.shift(pa, b, -1)) - (chart.shift(ma, b, 1) - chart.shift(ma, b, -1))
    return diff / (4 * chart.spacing[a] * chart.spacing[b])


def gradient(chart, arr: np.ndarray) -> np.ndarray:
    """Coordinate gradient, new trailing axis of length ``chart.ndim``."""
    return np.stack([d1(chart, arr, a) for a in range(chart.ndim)], axis=-1)


def hessian(chart, arr: np.ndarray) -> np.ndarray:
    """Coordinate second derivatives, two new trailing axes."""
    m = chart.ndim
    out = np.empty(arr.shape + (m, m))
    for a in range(m):
        out[..., a, a] = d2(chart, arr, a)
        for b in range(a + 1, m):
            mixed = dmix(chart, arr, a, b)
            out[..., a, b] = mixed
            out[..., b, a] = mixed
    return out


def neighbour(chart, offsets) -> np.ndarray:
    """Flat index of node + offsets for every node (ghosts folded back in)."""
    idx = np.meshgrid(*[chart.axis_index(a, int(offsets[a])) for a in range(chart.ndim)], indexing="ij")
    return np.ravel_multi_index(idx, chart.shape).ravel()


def first_derivative_stencil(chart, axis: int):
    """[(offset, weight)] for d/dx_axis."""
    h = chart.spacing[axis]
    e = np.zeros(chart.ndim, dtype=int)
    e[axis] = 1
    return [(e, 1 / (2 * h)), (-e, -1 / (2 * h))]


def second_derivative_stencil(chart, a: int, b: int):
    """[(offset, weight)] for d^2/dx_a dx_b."""
    ea = np.zeros(chart.ndim, dtype=int)
    eb = np.zeros(chart.ndim, dtype=int)
    ea[a] = 1
    eb[b] = 1
    if a == b:
        h2 = chart.spacing[a] ** 2
        return [(ea, 1 / h2), (0 * ea, -2 / h2), (-ea, 1 / h2)]
    w = 1 / (4 * chart.spacing[a] * chart.spacing[b])
    return [(ea + eb, w), (ea - eb, -w), (-ea + eb, -w), (-ea - eb, w)]
