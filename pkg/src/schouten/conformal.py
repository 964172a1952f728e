"""Conformal change of the Schouten tensor and the deformed equation.

For g~ = e^{-2u} g the Schouten tensor transforms as

    W = nabla^2 u + du (x) du - 1/2 |du|^2 g + A_g,

so F(lam(g~^{-1} A_g~)) = f becomes F(lam(g^{-1} W)) = f e^{-2u}. Along the
homotopy the solver works with the augmented tensor

    B_t = s (1 - psi(t)) g + psi(t) A_g + nabla^2 u + du (x) du - 1/2 |du|^2 g

and the residual

    F(lam(g^{-1} B_t)) - psi(t) f e^{-2u} - (1 - t) I(u)^{2/(n+1)},
    I(u) = int e^{-(n+1) u} dV_g.

Grid charts use the coordinate frame and second-order central differences.
The warped backend is the radial reduction: for u = u(r) the tensor B_t is
diagonal in the orthonormal frame with one radial eigenvalue
``c + u'' + u'^2/2`` and n-1 tangential ones ``c + (phi'/phi) u' - u'^2/2``
(``u''`` at a pole, where the tangential Hessian tends to the radial one).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import symfuncs
from .manifold import stencils
from .manifold.curvature import CurvatureBundle
from .manifold.doubling import NeumannViolation, check_neumann  # noqa: F401 (re-exported)
from .manifold.metric import DegenerateMetricError, MetricField
from .symfuncs import ConeSpec, DomainError, SymFuncSpec


class InadmissibleError(DomainError):
    """lam(g^{-1} B_t) left the cone of F at some node."""

    def __init__(self, message: str, report: "AdmissibilityReport"):
        super().__init__(message)
        self.report = report


@dataclass
class AdmissibilityReport:
    """Cone membership of per-node eigenvalues.

    ``worst_margin`` is the smallest defining inequality of the cone over
    all nodes (positive iff admissible everywhere). ``min_ricci`` is the
    smallest eigenvalue of g^{-1}(W + sigma_1(W) g/(n-2)), i.e. of the
    Ricci tensor of the conformal metric over n - 2; nonnegative values make
    the rescaled fields subharmonic, the property used in the blow-up
    analysis.
    """

    all_admissible: bool
    worst_node: tuple
    worst_margin: float
    min_ricci: float
    holds_ricci: bool

    def to_dict(self) -> dict:
        return {
            "all_admissible": bool(self.all_admissible),
            "worst_node": [int(i) for i in self.worst_node],
            "worst_margin": float(self.worst_margin),
            "min_ricci": float(self.min_ricci),
            "holds_ricci": bool(self.holds_ricci),
        }


@dataclass
class ConformalState:
    """u with its covariant derivatives and the conformal Schouten tensor W.

    On the warped backend ``grad``, ``hess`` and ``w`` are expressed in the
    orthonormal (radial, tangential...) frame.
    """

    u: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    w: np.ndarray
    eigenvalues: np.ndarray


@dataclass
class ProblemSpec:
    """Everything the deformed equation needs besides (u, t).

    ``schedule`` is any object with ``psi(t)``; ``f`` holds node values of
    the prescribed positive function.
    """

    metric: MetricField
    bundle: CurvatureBundle
    func: SymFuncSpec
    f: np.ndarray
    varsigma: float
    schedule: object
    safeguard: float = 1e-8
    _linv: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.func.n != self.metric.n:
            raise ValueError(f"F is for n={self.func.n}, metric has n={self.metric.n}")
        self.f = np.broadcast_to(np.asarray(self.f, dtype=float), self.metric.chart.shape).copy()
        if not np.all(self.f > 0):
            raise ValueError("prescribed f must be strictly positive")
        if self.varsigma <= 0:
            raise ValueError("varsigma must be positive")
        if not self.metric.warped:
            self._linv = np.linalg.inv(self.metric.cholesky())

    @property
    def chart(self):
        return self.metric.chart

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def cone(self) -> ConeSpec:
        return self.func.cone


# ---------------------------------------------------------------------------
# pointwise algebra


def eigen_pointwise(g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of g^{-1} W via Cholesky symmetrisation."""
    try:
        low = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError("metric not positive definite") from None
    linv = np.linalg.inv(low)
    sym = linv @ w @ np.swapaxes(linv, -1, -2)
    return np.linalg.eigvalsh(0.5 * (sym + np.swapaxes(sym, -1, -2)))


def _ricci_bound(lam: np.ndarray) -> np.ndarray:
    n = lam.shape[-1]
    return lam.min(axis=-1) + lam.sum(axis=-1) / (n - 2)


def admissibility_report(lam: np.ndarray, cone: ConeSpec, tol_ricci: float = 0.0) -> AdmissibilityReport:
    """Report for per-node eigenvalue tuples ``lam`` (shape chart.shape + (n,))."""
    margin = cone.margin(lam)
    worst = np.unravel_index(int(np.argmin(margin)), margin.shape)
    m_ric = float(_ricci_bound(lam).min())
    worst_margin = float(margin[worst])
    return AdmissibilityReport(
        all_admissible=worst_margin > 0,
        worst_node=tuple(int(i) for i in worst),
        worst_margin=worst_margin,
        min_ricci=m_ric,
        holds_ricci=m_ric >= -tol_ricci,
    )


# ---------------------------------------------------------------------------
# discrete operator


def _grid_derivatives(metric: MetricField, bundle: CurvatureBundle, u: np.ndarray):
    chart = metric.chart
    du = stencils.gradient(chart, u)
    hess = stencils.hessian(chart, u) - np.einsum("...kij,...k->...ij", bundle.christoffel, du)
    return du, hess


def _warped_derivatives(metric: MetricField, bundle: CurvatureBundle, u: np.ndarray):
    chart = metric.chart
    u1 = stencils.d1(chart, u, 0)
    u2 = stencils.d2(chart, u, 0)
    hess_t = np.where(metric.pole_mask, u2, bundle.radial_connection * u1)
    return u1, u2, hess_t


def _warped_conformal(metric, bundle, u, c_g, c_a):
    """(lam_r, lam_t, u1, u2, hess_t) for B = c_g g + c_a A + derivative terms."""
    u1, u2, hess_t = _warped_derivatives(metric, bundle, u)
    a_r = bundle.schouten[..., 0, 0]
    a_t = bundle.schouten[..., 1, 1]
    lam_r = c_g + c_a * a_r + u2 + 0.5 * u1**2
    lam_t = c_g + c_a * a_t + hess_t - 0.5 * u1**2
    return lam_r, lam_t, u1, u2, hess_t


def _expand_warped(lam_r: np.ndarray, lam_t: np.ndarray, n: int) -> np.ndarray:
    return np.stack([lam_r] + [lam_t] * (n - 1), axis=-1)


def assemble_w(u, metric: MetricField, bundle: CurvatureBundle, neumann_tol: float | None = None) -> ConformalState:
    """W = nabla^2 u + du (x) du - 1/2 |du|^2 g + A_g at every node.

    ``neumann_tol`` switches on the slab boundary-face check of
    :func:`~schouten.manifold.doubling.check_neumann`; the stencil itself
    always imposes the reflection condition through its ghost layer.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != metric.chart.shape:
        raise ValueError(f"field shape {u.shape} does not match chart {metric.chart.shape}")
    if neumann_tol is not None and metric.chart.backend == "slab":
        check_neumann(metric.chart, u, neumann_tol)
    n = metric.n
    if metric.warped:
        lam_r, lam_t, u1, u2, hess_t = _warped_conformal(metric, bundle, u, 0.0, 1.0)
        eye = np.eye(n)
        grad = u1[..., None] * eye[0]
        hess = np.einsum("...i,ij->...ij", _expand_warped(u2, hess_t, n), eye)
        lam = _expand_warped(lam_r, lam_t, n)
        w = np.einsum("...i,ij->...ij", lam, eye)
        return ConformalState(u, grad, hess, w, np.sort(lam, axis=-1))
    g = metric.g
    du, hess = _grid_derivatives(metric, bundle, u)
    grad_sq = np.einsum("...ij,...i,...j->...", metric.inverse(), du, du)
    w = hess + du[..., :, None] * du[..., None, :] - 0.5 * grad_sq[..., None, None] * g + bundle.schouten
    return ConformalState(u, du, hess, w, eigen_pointwise(g, w))


@dataclass
class _Evaluation:
    lam: np.ndarray  # per-node eigenvalues (grid: ascending, warped: radial first)
    basis: np.ndarray | None  # L^{-T} Q, columns pull eigenvectors back to coordinates
    du: np.ndarray
    extra: tuple
    psi: float
    integral: float  # I(u) = int e^{-(n+1)u} dV


def _evaluate(u, t: float, problem: ProblemSpec) -> _Evaluation:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"homotopy parameter t={t} outside [0, 1]")
    u = np.asarray(u, dtype=float)
    metric, bundle, n = problem.metric, problem.bundle, problem.n
    if u.shape != metric.chart.shape:
        raise ValueError(f"field shape {u.shape} does not match chart {metric.chart.shape}")
    psi = float(problem.schedule.psi(t))
    c_g = problem.varsigma * (1.0 - psi)
    with np.errstate(over="ignore", invalid="ignore"):
        integral = float(np.sum(np.exp(-(n + 1) * u) * metric.volume_weights()))
    if metric.warped:
        lam_r, lam_t, u1, u2, hess_t = _warped_conformal(metric, bundle, u, c_g, psi)
        lam = _expand_warped(lam_r, lam_t, n)
        return _Evaluation(lam, None, u1, (u2, hess_t), psi, integral)
    g = metric.g
    du, hess = _grid_derivatives(metric, bundle, u)
    grad_sq = np.einsum("...ij,...i,...j->...", metric.inverse(), du, du)
    b = (c_g - 0.5 * grad_sq)[..., None, None] * g + psi * bundle.schouten + hess
    b = b + du[..., :, None] * du[..., None, :]
    linv = problem._linv
    sym = linv @ b @ np.swapaxes(linv, -1, -2)
    lam, q = np.linalg.eigh(0.5 * (sym + np.swapaxes(sym, -1, -2)))
    basis = np.swapaxes(linv, -1, -2) @ q
    return _Evaluation(lam, basis, du, (grad_sq,), psi, integral)


def eigenvalues(u, t: float, problem: ProblemSpec) -> np.ndarray:
    """Per-node eigenvalues of g^{-1} B_t (sorted ascending)."""
    return np.sort(_evaluate(u, t, problem).lam, axis=-1)


def admissibility(u, problem: ProblemSpec, cone: ConeSpec | None = None, t: float = 1.0,
                  tol_ricci: float = 0.0) -> AdmissibilityReport:
    """Cone membership of lam(g^{-1} B_t); at t = 1 this is lam(g^{-1} W)."""
    cone = problem.cone if cone is None else cone
    return admissibility_report(_evaluate(u, t, problem).lam, cone, tol_ricci)


def _require_admissible(ev: _Evaluation, problem: ProblemSpec) -> None:
    report = admissibility_report(ev.lam, problem.cone)
    if not report.all_admissible:
        raise InadmissibleError(
            f"lam(g^-1 B) leaves the cone of {problem.func.label} at node {report.worst_node} "
            f"(margin {report.worst_margin:.3e})", report)


def integral_term(u, metric: MetricField) -> float:
    """(int e^{-(n+1)u} dV)^{2/(n+1)} with the chart quadrature."""
    n = metric.n
    total = float(np.sum(np.exp(-(n + 1) * np.asarray(u)) * metric.volume_weights()))
    return total ** (2.0 / (n + 1))


def _residual_from(ev: _Evaluation, u, t: float, problem: ProblemSpec) -> np.ndarray:
    n = problem.n
    value = symfuncs.f_value_unchecked(problem.func, ev.lam)
    nonlocal_term = (1.0 - t) * ev.integral ** (2.0 / (n + 1))
    return value - ev.psi * problem.f * np.exp(-2.0 * u) - nonlocal_term


def residual(u, t: float, problem: ProblemSpec) -> np.ndarray:
    """Node values of the deformed equation; raises :class:`InadmissibleError` off the cone."""
    ev = _evaluate(u, t, problem)
    _require_admissible(ev, problem)
    return _residual_from(ev, np.asarray(u, dtype=float), t, problem)


# ---------------------------------------------------------------------------
# linearization


@dataclass
class Linearization:
    """J = S + 1 v^T: a sparse local part plus the rank-one nonlocal term.

    ``coefficients`` holds the second-order coefficient matrix F^{ij} per
    node (orthonormal frame on the warped backend).
    """

    sparse: sp.csr_matrix
    v: np.ndarray
    coefficients: np.ndarray
    shape: tuple

    def matvec(self, x) -> np.ndarray:
        flat = np.asarray(x, dtype=float).reshape(-1)
        return (self.sparse @ flat + self.v @ flat).reshape(self.shape)

    def dense(self) -> np.ndarray:
        return self.sparse.toarray() + np.outer(np.ones(self.v.size), self.v)

    def solve(self, rhs) -> np.ndarray:
        """Solve J x = rhs through the bordered system [[S, 1], [v^T, -1]]."""
        size = self.v.size
        col = sp.csr_matrix(np.ones((size, 1)))
        border = sp.bmat([[self.sparse, col], [sp.csr_matrix(self.v[None, :]), sp.csr_matrix([[-1.0]])]],
                         format="csc")
        b = np.concatenate([np.asarray(rhs, dtype=float).reshape(-1), [0.0]])
        try:
            x = spla.splu(border).solve(b)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"singular Jacobian ({exc})") from None
        if not np.all(np.isfinite(x)):
            raise np.linalg.LinAlgError("singular Jacobian")
        return x[:size].reshape(self.shape)

    def as_operator(self) -> spla.LinearOperator:
        size = self.v.size
        return spla.LinearOperator((size, size), matvec=lambda x: self.matvec(x).reshape(-1), dtype=float)


def _assemble(chart, terms, diagonal: np.ndarray) -> sp.csr_matrix:
    size = chart.size
    base = np.arange(size)
    rows, cols, vals = [base], [base], [diagonal.reshape(-1)]
    for coef, stencil in terms:
        c = coef.reshape(-1)
        if not np.any(c):
            continue
        for offset, weight in stencil:
            rows.append(base)
            cols.append(stencils.neighbour(chart, offset))
            vals.append(weight * c)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(size, size))


def linearize(u, t: float, problem: ProblemSpec) -> Linearization:
    """Jacobian of :func:`residual` with respect to node values of u."""
    u = np.asarray(u, dtype=float)
    ev = _evaluate(u, t, problem)
    _require_admissible(ev, problem)
    metric, chart, n = problem.metric, problem.chart, problem.n
    dfl = symfuncs.f_gradient_unchecked(problem.func, ev.lam)
    zeroth = 2.0 * ev.psi * problem.f * np.exp(-2.0 * u)
    weight = metric.volume_weights() * np.exp(-(n + 1) * u)
    v = 2.0 * (1.0 - t) * ev.integral ** (2.0 / (n + 1) - 1.0) * weight

    if metric.warped:
        g_r = dfl[..., 0]
        g_t = dfl[..., 1:].sum(axis=-1)
        u1 = ev.du
        poles = metric.pole_mask
        conn = np.where(poles, 0.0, problem.bundle.radial_connection)
        second = g_r + np.where(poles, g_t, 0.0)
        first = g_r * u1 + g_t * (conn - u1)
        terms = [(second, stencils.second_derivative_stencil(chart, 0, 0)),
                 (first, stencils.first_derivative_stencil(chart, 0))]
        coeffs = np.einsum("...i,ij->...ij", dfl, np.eye(n))
    else:
        coeffs = np.einsum("...im,...m,...jm->...ij", ev.basis, dfl, ev.basis)
        coeffs = 0.5 * (coeffs + np.swapaxes(coeffs, -1, -2))
        ginv = metric.inverse()
        du = ev.du
        trace = np.einsum("...ij,...ij->...", coeffs, metric.g)
        first = (-np.einsum("...ij,...kij->...k", coeffs, problem.bundle.christoffel)
                 + 2.0 * np.einsum("...kj,...j->...k", coeffs, du)
                 - trace[..., None] * np.einsum("...kl,...l->...k", ginv, du))
        terms = []
        for a in range(n):
            terms.append((coeffs[..., a, a], stencils.second_derivative_stencil(chart, a, a)))
            for b in range(a + 1, n):
                terms.append((2.0 * coeffs[..., a, b], stencils.second_derivative_stencil(chart, a, b)))
            terms.append((first[..., a], stencils.first_derivative_stencil(chart, a)))
    return Linearization(_assemble(chart, terms, zeroth), v.reshape(-1), coeffs, chart.shape)
