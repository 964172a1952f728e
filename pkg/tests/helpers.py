"""Small builders shared by the test modules."""

import numpy as np

from schouten.continuation import make_problem, smooth_perturbation
from schouten.manifold import GridChart, MetricRecipe, build_metric, warped_chart
from schouten.symfuncs import SymFuncSpec


def warped_problem(recipe="hemisphere_warped", n=4, res=128, family="sigma_k_root", k=2, f=1.0, **kw):
    rec = MetricRecipe(recipe, **kw)
    metric = build_metric(warped_chart(rec, n, res), rec)
    return make_problem(metric, SymFuncSpec(family, n, k if family == "sigma_k_root" else None), f=f)


def grid_problem(backend="torus", n=3, res=9, recipe="flat", family="ricci_det", k=None, f=1.0, **kw):
    chart = GridChart.torus(n, res) if backend == "torus" else GridChart.slab(n, res)
    metric = build_metric(chart, MetricRecipe(recipe, **kw))
    return make_problem(metric, SymFuncSpec(family, n, k), f=f)


def smooth_directions(chart, count, seed=0, modes=2):
    """Smooth random fields scaled so their second differences are O(1)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        phi = smooth_perturbation(chart, 1.0, rng, modes=modes)
        second = max(np.abs(chart.shift(phi, a, 1) - 2 * phi + chart.shift(phi, a, -1)).max() / chart.spacing[a] ** 2
                     for a in range(chart.ndim))
        out.append(phi / max(second, 1.0))
    return out
