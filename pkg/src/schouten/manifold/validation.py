"""Refinement studies of :func:`curvature` against the finite-difference oracle."""

from __future__ import annotations

from itertools import product

import numpy as np

from .charts import GridChart
from .curvature import curvature, fd_curvature_oracle, generalized_eigenvalues, schouten_eigenvalues
from .metric import build_metric, warped_chart
from .recipes import MetricRecipe


def _oracle_nodes(chart: GridChart, max_nodes: int):
    if chart.backend == "warped":
        return [(i,) for i in range(chart.resolution[0])]
    axes = []
    for a in range(chart.ndim):
        lo, hi = (0, chart.resolution[a] - 1) if chart.periodic(a) else (2, chart.resolution[a] - 3)
        count = max(2, int(round(max_nodes ** (1.0 / chart.ndim))))
        axes.append(np.unique(np.linspace(lo, hi, count).round().astype(int)))
    return list(product(*axes))


def oracle_deviation(metric, max_nodes: int = 64, reference: float | None = None) -> dict:
    """Max deviation between production curvature and the oracle.

    Warped charts compare Schouten eigenvalues (the frames differ); grids
    compare the components A_ij. Nodes whose oracle stencil does not fit
    are skipped. With ``reference`` the largest deviation of the oracle
    eigenvalues from that constant is reported as well.
    """
    chart = metric.chart
    bundle = curvature(metric)
    eig = schouten_eigenvalues(metric, bundle)
    worst_eig, worst_comp, worst_ref, used = 0.0, 0.0, 0.0, 0
    for node in _oracle_nodes(chart, max_nodes):
        try:
            ob, g0 = fd_curvature_oracle(metric, node)
        except ValueError:
            continue
        used += 1
        oracle_eig = generalized_eigenvalues(g0, ob.schouten)
        worst_eig = max(worst_eig, float(np.abs(oracle_eig - eig[node]).max()))
        if reference is not None:
            worst_ref = max(worst_ref, float(np.abs(oracle_eig - reference).max()))
        if not metric.warped:
            worst_comp = max(worst_comp, float(np.abs(ob.schouten - bundle.schouten[node]).max()))
    out = {"eigenvalue": worst_eig, "component": worst_comp if not metric.warped else worst_eig,
           "nodes": used, "h": chart.h, "schouten_max": float(np.abs(bundle.schouten).max())}
    if reference is not None:
        out["oracle_reference_deviation"] = worst_ref
    return out


def refinement_study(recipe: MetricRecipe, backend: str, n: int, resolutions=(64, 128),
                     length: float = 1.0) -> dict:
    """Oracle deviation at each resolution and the observed order between them.

    For recipes whose exact Schouten tensor is g/2 (round sphere and
    hemisphere) the deviation of the oracle eigenvalues from 1/2 is
    reported, also as a multiple of h^2.
    """
    rows = []
    for res in resolutions:
        if backend == "warped":
            chart = warped_chart(recipe, n, res)
        elif backend == "torus":
            chart = GridChart.torus(n, res, length)
        else:
            chart = GridChart.slab(n, res, length)
        metric = build_metric(chart, recipe)
        spherical = recipe.name in ("round_sphere_warped", "hemisphere_warped")
        row = {"resolution": int(res), **oracle_deviation(metric, reference=0.5 if spherical else None)}
        if spherical:
            row["half_deviation"] = row.pop("oracle_reference_deviation")
            row["half_deviation_over_h2"] = row["half_deviation"] / chart.h**2
        rows.append(row)
    out = {"recipe": recipe.to_dict(), "backend": backend, "n": n, "rows": rows}
    errs = [r["component"] for r in rows]
    if len(rows) >= 2 and min(errs) > 0:
        h = [r["h"] for r in rows]
        out["order"] = float(np.log(errs[0] / errs[-1]) / np.log(h[0] / h[-1]))
    else:
        out["order"] = None
    return out
