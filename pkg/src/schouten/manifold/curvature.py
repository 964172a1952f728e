"""Curvature of discrete metrics, and an independent finite-difference oracle.

:func:`curvature` is the production path: on grids the fully covariant
Riemann tensor is assembled directly from first and second central
differences of g_ij; on the warped backend closed-form expressions in phi
are used. :func:`fd_curvature_oracle` recomputes the same quantities at one
node through a separate route (Christoffel symbols from metric samples, then
differences of Christoffel symbols) and is meant for validation only.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import stencils
from .metric import MetricField


@dataclass
class CurvatureBundle:
    """Curvature tensors per node.

    ``frame`` is ``"coordinate"`` on grids and ``"orthonormal"`` (radial
    first, then the n-1 sphere directions) on the warped backend.
    ``christoffel[..., k, i, j]`` is Gamma^k_ij (grids only);
    ``radial_connection`` is phi'/phi (warped only, 0 at poles where it is
    not used).
    """

    frame: str
    ricci: np.ndarray
    scalar: np.ndarray
    schouten: np.ndarray
    christoffel: np.ndarray | None = None
    radial_connection: np.ndarray | None = None
    riemann: np.ndarray | None = None


def schouten_from_ricci(ricci: np.ndarray, scalar: np.ndarray, g: np.ndarray, n: int) -> np.ndarray:
    """A = (Ric - R/(2(n-1)) g)/(n-2)."""
    return (ricci - (scalar / (2.0 * (n - 1)))[..., None, None] * g) / (n - 2)


def curvature(metric: MetricField) -> CurvatureBundle:
    """Christoffel symbols, Ricci, scalar and Schouten tensors at every node."""
    if metric.warped:
        return _warped_curvature(metric)
    metric.cholesky()  # raises DegenerateMetricError with the node index
    return _grid_curvature(metric)


def _grid_curvature(metric: MetricField) -> CurvatureBundle:
    chart, n, g = metric.chart, metric.n, metric.g
    ginv = np.linalg.inv(g)
    # dg[..., k, i, j] = d_k g_ij ; ddg[..., k, l, i, j] = d_k d_l g_ij
    dg = np.stack([stencils.d1(chart, g, k) for k in range(n)], axis=-3)
    ddg = np.empty(chart.shape + (n,) * 4)
    for k in range(n):
        ddg[..., k, k, :, :] = stencils.d2(chart, g, k)
        for m in range(k + 1, n):
            mixed = stencils.dmix(chart, g, k, m)
            ddg[..., k, m, :, :] = mixed
            ddg[..., m, k, :, :] = mixed
    first_kind = 0.5 * (np.einsum("...ilj->...lij", dg) + np.einsum("...jli->...lij", dg) - dg)
    gamma = np.einsum("...al,...lij->...aij", ginv, first_kind)
    riem = 0.5 * (
        np.einsum("...bcad->...abcd", ddg)
        + np.einsum("...adbc->...abcd", ddg)
        - np.einsum("...bdac->...abcd", ddg)
        - np.einsum("...acbd->...abcd", ddg)
    )
    riem = riem + np.einsum("...ef,...ebc,...fad->...abcd", g, gamma, gamma)
    riem = riem - np.einsum("...ef,...ebd,...fac->...abcd", g, gamma, gamma)
    ricci = np.einsum("...ac,...abcd->...bd", ginv, riem)
    ricci = 0.5 * (ricci + np.swapaxes(ricci, -1, -2))
    scalar = np.einsum("...ij,...ij->...", ginv, ricci)
    return CurvatureBundle(
        frame="coordinate",
        ricci=ricci,
        scalar=scalar,
        schouten=schouten_from_ricci(ricci, scalar, g, n),
        christoffel=gamma,
    )


def warped_schouten_eigenvalues(metric: MetricField) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (radial, tangential) Schouten eigenvalues of dr^2 + phi^2 g_S.

    Interior: A_rr = -phi''/phi - (K - phi'^2)/(2 phi^2), A_tt = (K - phi'^2)/(2 phi^2).
    At a pole both equal -phi'(r_p) phi'''(r_p)/2.
    """
    ric_r, ric_t = _warped_ricci(metric)
    n = metric.n
    scalar = ric_r + (n - 1) * ric_t
    a_r = (ric_r - scalar / (2.0 * (n - 1))) / (n - 2)
    a_t = (ric_t - scalar / (2.0 * (n - 1))) / (n - 2)
    return a_r, a_t


def _warped_ricci(metric: MetricField) -> tuple[np.ndarray, np.ndarray]:
    n, kappa = metric.n, metric.sphere_curvature
    phi, d1, d2, d3 = (metric.phi(k) for k in range(4))
    poles = metric.pole_mask
    safe = np.where(poles, 1.0, phi)
    ric_r = -(n - 1) * d2 / safe
    ric_t = -d2 / safe + (n - 2) * (kappa - d1**2) / safe**2
    pole_value = -(n - 1) * d1 * d3
    ric_r = np.where(poles, pole_value, ric_r)
    ric_t = np.where(poles, pole_value, ric_t)
    return ric_r, ric_t


def _warped_curvature(metric: MetricField) -> CurvatureBundle:
    n = metric.n
    ric_r, ric_t = _warped_ricci(metric)
    diag = np.stack([ric_r] + [ric_t] * (n - 1), axis=-1)
    ricci = np.einsum("...i,ij->...ij", diag, np.eye(n))
    scalar = ric_r + (n - 1) * ric_t
    poles = metric.pole_mask
    conn = np.where(poles, 0.0, metric.phi(1) / np.where(poles, 1.0, metric.phi()))
    return CurvatureBundle(
        frame="orthonormal",
        ricci=ricci,
        scalar=scalar,
        schouten=schouten_from_ricci(ricci, scalar, metric.tensor(), n),
        radial_connection=conn,
    )


def schouten_eigenvalues(metric: MetricField, bundle: CurvatureBundle | None = None) -> np.ndarray:
    """Sorted eigenvalues of g^{-1} A per node."""
    bundle = curvature(metric) if bundle is None else bundle
    return generalized_eigenvalues(metric.tensor(), bundle.schouten)


def generalized_eigenvalues(g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Eigenvalues of g^{-1} W via Cholesky symmetrisation, ascending."""
    low = np.linalg.cholesky(g)
    linv = np.linalg.inv(low)
    sym = linv @ w @ np.swapaxes(linv, -1, -2)
    return np.linalg.eigvalsh(0.5 * (sym + np.swapaxes(sym, -1, -2)))


# ---------------------------------------------------------------------------
# independent oracle


def _christoffel_at(gfun, steps, point):
    n = len(steps)
    g0 = gfun(point)
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n, dtype=int)
        e[k] = 1
        dg[k] = (gfun(point + e) - gfun(point - e)) / (2 * steps[k])
    ginv = np.linalg.inv(g0)
    gam = np.empty((n, n, n))
    for a, b, c in product(range(n), repeat=3):
        gam[a, b, c] = 0.5 * sum(ginv[a, d] * (dg[b, d, c] + dg[c, d, b] - dg[d, b, c]) for d in range(n))
    return gam


def _oracle(gfun, steps) -> CurvatureBundle:
    n = len(steps)
    origin = np.zeros(n, dtype=int)
    gam = _christoffel_at(gfun, steps, origin)
    dgam = np.empty((n, n, n, n))  # dgam[c, a, b, d] = d_c Gamma^a_bd
    for c in range(n):
        e = np.zeros(n, dtype=int)
        e[c] = 1
        dgam[c] = (_christoffel_at(gfun, steps, e) - _christoffel_at(gfun, steps, -e)) / (2 * steps[c])
    riem = np.zeros((n, n, n, n))  # R^a_{bcd}
    for a, b, c, d in product(range(n), repeat=4):
        val = dgam[c, a, d, b] - dgam[d, a, c, b]
        for e in range(n):
            val += gam[a, c, e] * gam[e, d, b] - gam[a, d, e] * gam[e, c, b]
        riem[a, b, c, d] = val
    ricci = np.einsum("abad->bd", riem)
    ricci = 0.5 * (ricci + ricci.T)
    g0 = gfun(origin)
    scalar = float(np.einsum("ij,ij->", np.linalg.inv(g0), ricci))
    return CurvatureBundle(
        frame="coordinate",
        ricci=ricci,
        scalar=np.asarray(scalar),
        schouten=schouten_from_ricci(ricci, np.asarray(scalar), g0, n),
        christoffel=gam,
        riemann=riem,
    )


def fd_curvature_oracle(metric: MetricField, node) -> tuple[CurvatureBundle, np.ndarray]:
    """Curvature at one node from raw metric samples on a +-2 step stencil.

    Returns the bundle (in the coordinates used by the oracle) together with
    the metric matrix at the node, so callers can form g^{-1} A.

    Grids use the chart coordinates (wrapping on periodic axes). The warped
    backend is embedded in Cartesian coordinates x in R^n, r = |x|, where
    g = dr^2 + (phi(r)/r)^2 (|x|^2 dx^2 - (x.dx)^2)/|x|^2 is sampled
    directly, so no pole or angle singularities enter the stencil.
    """
    if metric.warped:
        gfun, steps = _warped_sampler(metric, int(np.atleast_1d(node)[0]))
    else:
        gfun, steps = _grid_sampler(metric, tuple(np.atleast_1d(node)))
    bundle = _oracle(gfun, steps)
    return bundle, gfun(np.zeros(len(steps), dtype=int))


def _grid_sampler(metric: MetricField, node: tuple):
    chart = metric.chart
    if len(node) != chart.ndim:
        raise ValueError(f"node {node} does not match chart dimension {chart.ndim}")
    for a in range(chart.ndim):
        if not chart.periodic(a) and not (2 <= node[a] <= chart.resolution[a] - 3):
            raise ValueError(f"node {node}: full stencil unavailable along non-periodic axis {a}")
    base = np.array(node)

    def gfun(offset):
        idx = base + np.asarray(offset)
        idx = tuple(int(i) % chart.resolution[a] for a, i in enumerate(idx))
        return metric.g[idx]

    return gfun, chart.spacing


def _warped_sampler(metric: MetricField, node: int):
    chart, n = metric.chart, metric.n
    h = chart.spacing[0]
    last = chart.resolution[0] - 1
    profile = metric.profile
    start_pole, end_pole = bool(metric.pole_mask[0]), bool(metric.pole_mask[-1])
    # Cartesian coordinates are centred at a pole; they are singular at the
    # antipodal one, so the far half of a two-pole chart uses the far pole.
    if end_pole and (2 * node > last or not start_pole):
        steps_out = last - node

        def radial_profile(s):
            return float(profile(chart.r_max - s))
    elif start_pole:
        steps_out = node

        def radial_profile(s):
            return float(profile(chart.r_min + s))
    else:
        steps_out = node if node >= 2 else -1

        def radial_profile(s):
            return float(profile(s))

    if steps_out < 0 or steps_out + 2 > last:
        raise ValueError(f"node {node}: oracle stencil leaves the radial chart")
    s0 = steps_out * h if (start_pole or end_pole) else chart.radii[node]

    origin = np.zeros(n)
    origin[0] = s0

    def gfun(offset):
        x = origin + h * np.asarray(offset, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            return np.eye(n)
        radial = np.outer(x, x) / r**2
        ratio = radial_profile(r) / r
        return radial + ratio**2 * (np.eye(n) - radial)

    return gfun, (h,) * n
