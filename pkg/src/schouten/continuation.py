"""Homotopy continuation in t from the trivial solution u = 0 at t = 0.

The path follows residual(u, t) = 0 with a damped Newton corrector and an
adaptive step in t. A run ends in one of three ways: the corrector
converges at t = 1, the solution runs off to -infinity (blow-up), or the
step control gives up for another reason.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import conformal
from .conformal import InadmissibleError, ProblemSpec
from .manifold import curvature
from .manifold.metric import MetricField
from .symfuncs import SymFuncSpec

log = logging.getLogger(__name__)

OUTCOMES = ("converged_t1", "blowup_detected", "step_failure")


@dataclass(frozen=True)
class PsiSchedule:
    """C^1 ramp psi: [0, 1] -> [0, 1] with psi(0) = 0 and psi = 1 on [t_full, 1].

    The ramp is the cubic smoothstep s^2 (3 - 2 s), s = t / t_full.
    """

    t_full: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.t_full <= 0.5:
            raise ValueError("t_full must lie in (0, 1/2]")

    def _s(self, t: float) -> float:
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t={t} outside [0, 1]")
        return min(t / self.t_full, 1.0)

    def psi(self, t: float) -> float:
        s = self._s(t)
        return s * s * (3.0 - 2.0 * s)

    def psi_prime(self, t: float) -> float:
        s = self._s(t)
        if s >= 1.0:
            return 0.0
        return 6.0 * s * (1.0 - s) / self.t_full


_DEFAULT_SCHEDULE = PsiSchedule()


def psi(t: float) -> float:
    return _DEFAULT_SCHEDULE.psi(t)


def psi_prime(t: float) -> float:
    return _DEFAULT_SCHEDULE.psi_prime(t)


def varsigma(metric: MetricField, spec: SymFuncSpec) -> float:
    """(n rho)^{-1} vol^{2/(n+1)}, with the chart's own volume quadrature.

    Using the discrete volume makes u = 0 an exact discrete solution at t = 0.
    """
    n = metric.n
    return metric.volume() ** (2.0 / (n + 1)) / (n * spec.rho)


def make_problem(metric: MetricField, spec: SymFuncSpec, f=1.0, schedule: PsiSchedule | None = None,
                 safeguard: float = 1e-8) -> ProblemSpec:
    return ProblemSpec(
        metric=metric,
        bundle=curvature(metric),
        func=spec,
        f=f,
        varsigma=varsigma(metric, spec),
        schedule=schedule or PsiSchedule(),
        safeguard=safeguard,
    )


# ---------------------------------------------------------------------------
# Newton corrector


@dataclass
class NewtonOptions:
    tol: float = 1e-9
    max_iter: int = 30
    min_step: float = 1.0 / 1024
    sufficient_decrease: float = 1e-4


@dataclass
class NewtonResult:
    u: np.ndarray
    converged: bool
    iterations: int
    residual_history: list
    step_history: list
    reason: str = ""

    @property
    def residual_max(self) -> float:
        return self.residual_history[-1]


def _margin(u, t, problem) -> float:
    """Smallest cone margin of lam(g^{-1} B_t); -inf for non-finite states."""
    if not np.all(np.isfinite(u)):
        return -np.inf
    with np.errstate(over="ignore", invalid="ignore"):
        margin = float(problem.cone.margin(conformal.eigenvalues(u, t, problem)).min())
    return margin if np.isfinite(margin) else -np.inf


def newton_solve(u0, t: float, problem: ProblemSpec, opts: NewtonOptions | None = None) -> NewtonResult:
    """Damped Newton for residual(., t) = 0 starting at ``u0``.

    Trial steps are halved until the max-norm of the residual decreases and
    the admissibility margin stays above ``problem.safeguard``. Raises
    :class:`InadmissibleError` if ``u0`` itself is not admissible.
    """
    opts = opts or NewtonOptions()
    u = np.array(u0, dtype=float)
    if _margin(u, t, problem) <= problem.safeguard:
        conformal.residual(u, t, problem)  # raises with the full report if outside the cone
        raise InadmissibleError("initial guess within the admissibility safeguard",
                                conformal.admissibility(u, problem, t=t))
    r = conformal.residual(u, t, problem)
    norms = [float(np.abs(r).max())]
    steps = []
    for it in range(opts.max_iter):
        if norms[-1] <= opts.tol:
            return NewtonResult(u, True, it, norms, steps)
        try:
            du = conformal.linearize(u, t, problem).solve(-r)
        except np.linalg.LinAlgError:
            return NewtonResult(u, False, it, norms, steps, "singular Jacobian")
        alpha, hit_cone = 1.0, False
        while alpha >= opts.min_step:
            trial = u + alpha * du
            if _margin(trial, t, problem) <= problem.safeguard:
                hit_cone = True
                alpha *= 0.5
                continue
            with np.errstate(over="ignore", invalid="ignore"):
                r_trial = conformal.residual(trial, t, problem)
            norm = float(np.abs(r_trial).max())
            if np.isfinite(norm) and norm <= (1.0 - opts.sufficient_decrease * alpha) * norms[-1]:
                break
            alpha *= 0.5
        else:
            reason = "admissibility lost on all step sizes" if hit_cone else "line search stalled"
            return NewtonResult(u, False, it, norms, steps, reason)
        u, r = trial, r_trial
        norms.append(norm)
        steps.append(alpha)
    converged = norms[-1] <= opts.tol
    return NewtonResult(u, converged, opts.max_iter, norms, steps, "" if converged else "iteration limit")


# ---------------------------------------------------------------------------
# t = 0 checks


@dataclass
class T0Report:
    residual_max: float
    perturbation_amplitude: float
    trials: list
    passed: bool

    def to_dict(self) -> dict:
        return {"residual_max": self.residual_max, "perturbation_amplitude": self.perturbation_amplitude,
                "trials": self.trials, "passed": self.passed}


def smooth_perturbation(chart, amplitude: float, rng, modes: int = 2) -> np.ndarray:
    """Random low-frequency field with max-norm ``amplitude``.

    Uses cosines in each axis (mode 0..modes), which satisfy the reflection
    condition on slab faces and at warped chart ends.
    """
    coords = chart.coordinates()
    field_ = np.zeros(chart.shape)
    for _ in range(4):
        term = np.ones(chart.shape)
        for a in range(chart.ndim):
            k = rng.integers(0, modes + 1)
            extent = chart.extent(a)
            period = extent if chart.periodic(a) else 2.0 * extent
            start = chart.r_min if chart.backend == "warped" else 0.0
            term = term * np.cos(2.0 * np.pi * k * (coords[a] - start) / period + (
                rng.uniform(0, 2 * np.pi) if chart.periodic(a) else 0.0))
        field_ += rng.normal() * term
    field_ -= field_.mean()
    scale = np.abs(field_).max()
    if scale == 0.0:
        field_ = np.cos(2.0 * np.pi * (coords[0] - coords[0].min()) / (2.0 * chart.extent(0)))
        scale = np.abs(field_).max()
    return amplitude * field_ / scale


def verify_t0(problem: ProblemSpec, amplitude: float = 1e-3, trials: int = 3, seed: int = 0,
              opts: NewtonOptions | None = None) -> T0Report:
    """u = 0 solves the t = 0 problem, and Newton returns there from nearby fields."""
    chart = problem.chart
    r0 = float(np.abs(conformal.residual(np.zeros(chart.shape), 0.0, problem)).max())
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        u0 = smooth_perturbation(chart, amplitude, rng)
        res = newton_solve(u0, 0.0, problem, opts)
        out.append({"iterations": res.iterations, "converged": res.converged,
                    "u_max_abs": float(np.abs(res.u).max())})
    passed = all(tr["converged"] and tr["u_max_abs"] <= 1e-9 and tr["iterations"] <= 6 for tr in out)
    return T0Report(r0, amplitude, out, passed)


# ---------------------------------------------------------------------------
# path following


@dataclass
class PathOptions:
    newton: NewtonOptions = field(default_factory=NewtonOptions)
    dt_initial: float = 0.05
    dt_min: float = 1e-4
    dt_max: float = 0.1
    grow: float = 1.5
    shrink: float = 0.5
    easy_iterations: int = 3
    blowup_threshold: float = -12.0
    max_steps: int = 2000
    keep_states: int = 12
    secant: bool = True


@dataclass
class ContinuationState:
    """Summary of one accepted point on the path (``u`` kept for the newest states)."""

    t: float
    residual_max: float
    residual_l2: float
    newton_iters: int
    margin: float
    integral_value: float
    min_u: float
    max_u: float
    dt: float
    u: np.ndarray | None = None

    def to_dict(self, with_field: bool = False) -> dict:
        out = {
            "t": self.t, "residual_max": self.residual_max, "residual_l2": self.residual_l2,
            "newton_iters": self.newton_iters, "margin": self.margin,
            "integral_value": self.integral_value, "min_u": self.min_u, "max_u": self.max_u, "dt": self.dt,
        }
        if with_field and self.u is not None:
            out["u"] = self.u.reshape(-1).tolist()
        return out


@dataclass
class RunOutcome:
    kind: str
    final_state: ContinuationState
    history: list
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.kind == "converged_t1"


def _summarise(u, t, problem, newton: NewtonResult, dt: float) -> ContinuationState:
    r = conformal.residual(u, t, problem)
    w = problem.metric.volume_weights()
    return ContinuationState(
        t=float(t),
        residual_max=float(np.abs(r).max()),
        residual_l2=float(np.sqrt(np.sum(w * r * r))),
        newton_iters=newton.iterations,
        margin=_margin(u, t, problem),
        integral_value=conformal.integral_term(u, problem.metric),
        min_u=float(u.min()),
        max_u=float(u.max()),
        dt=float(dt),
        u=u.copy(),
    )


def run_path(problem: ProblemSpec, opts: PathOptions | None = None, u_start=None) -> RunOutcome:
    """Follow the homotopy from t = 0 to t = 1.

    Predictor: secant extrapolation in t from the last two accepted states
    (falls back to the previous u if the extrapolant is inadmissible).
    Step control: shrink on corrector failure, grow after easy solves.
    Blow-up is declared when the step falls below ``dt_min`` while
    min u < ``blowup_threshold``.
    """
    opts = opts or PathOptions()
    u = np.zeros(problem.chart.shape) if u_start is None else np.array(u_start, dtype=float)
    first = newton_solve(u, 0.0, problem, opts.newton)
    if not first.converged:
        state = _summarise(first.u, 0.0, problem, first, 0.0)
        return RunOutcome("step_failure", state, [state], f"no solution at t = 0: {first.reason}")
    u = first.u
    history = [_summarise(u, 0.0, problem, first, 0.0)]
    t, dt = 0.0, opts.dt_initial
    prev = None  # (t, u) of the state before the current one
    message = ""
    for _ in range(opts.max_steps):
        if t >= 1.0:
            break
        dt = min(dt, 1.0 - t)
        t_new = 1.0 if 1.0 - (t + dt) < 1e-14 else t + dt
        guess = u
        if opts.secant and prev is not None:
            guess = u + (u - prev[1]) * ((t_new - t) / (t - prev[0]))
            if _margin(guess, t_new, problem) <= problem.safeguard:
                guess = u
        res = _corrector(guess, u, t_new, problem, opts.newton)
        if res.converged:
            prev = (t, u)
            t, u = t_new, res.u
            history.append(_summarise(u, t, problem, res, dt))
            _trim(history, opts.keep_states)
            log.debug("t=%.6f dt=%.2e iters=%d min_u=%.3f", t, dt, res.iterations, u.min())
            if res.iterations <= opts.easy_iterations:
                dt = min(dt * opts.grow, opts.dt_max)
            continue
        message = res.reason
        dt *= opts.shrink
        if dt < opts.dt_min:
            kind = "blowup_detected" if history[-1].min_u < opts.blowup_threshold else "step_failure"
            return RunOutcome(kind, history[-1], history,
                              f"step below {opts.dt_min:g} at t={t:.6f} ({message})")
    if t >= 1.0:
        return RunOutcome("converged_t1", history[-1], history)
    return RunOutcome("step_failure", history[-1], history, f"step limit reached at t={t:.6f}")


def _corrector(guess, fallback, t, problem, opts) -> NewtonResult:
    for start in (guess, fallback):
        try:
            return newton_solve(start, t, problem, opts)
        except InadmissibleError:
            continue
    return NewtonResult(fallback, False, 0, [np.inf], [], "start inadmissible at the new t")


def _trim(history: list, keep: int) -> None:
    for state in history[:-keep] if keep > 0 else history:
        state.u = None


# ---------------------------------------------------------------------------
# interior estimate monitor


@dataclass
class MonitorReport:
    """Empirical constant of the interior gradient/Hessian estimate.

    ``ratios[i, j]`` is the value for ``centers[i]`` and ``radii[j]``;
    ``constant`` is their maximum.
    """

    constant: float
    ratios: np.ndarray
    centers: list
    radii: np.ndarray

    def to_dict(self) -> dict:
        return {"constant": self.constant, "radii": self.radii.tolist(),
                "centers": [list(map(int, c)) for c in self.centers]}


def derivative_density(u, problem: ProblemSpec) -> np.ndarray:
    """|nabla^2 u|_g + |du|_g^2 per node."""
    state = conformal.assemble_w(u, problem.metric, problem.bundle)
    if problem.metric.warped:
        return np.sqrt(np.sum(state.hess**2, axis=(-1, -2))) + np.sum(state.grad**2, axis=-1)
    ginv = problem.metric.inverse()
    hess_sq = np.einsum("...ia,...jb,...ij,...ab->...", ginv, ginv, state.hess, state.hess)
    grad_sq = np.einsum("...ij,...i,...j->...", ginv, state.grad, state.grad)
    return np.sqrt(np.maximum(hess_sq, 0.0)) + grad_sq


def estimate_monitor(u, problem: ProblemSpec, radii=None, centers=None, ball_factor: float = 2.0 * np.sqrt(10.0)
                     ) -> MonitorReport:
    """max over centers x, radii r of
    sup_{B(x, r)} (|nabla^2 u| + |du|^2) / (r^{-2} + exp(-2 inf_{B(x, c r)} u)), c = 2 sqrt(10).

    Defaults use radii that are fixed fractions of the chart extent and a
    fixed lattice of centres, so the ratio can be compared across
    resolutions.
    """
    chart = problem.chart
    u = np.asarray(u, dtype=float)
    dens = derivative_density(u, problem)
    if radii is None:
        extent = min(chart.extent(a) for a in range(chart.ndim))
        radii = extent * np.array([1 / 64, 1 / 32, 1 / 16])
    radii = np.asarray(radii, dtype=float)
    if centers is None:
        centers = _default_centers(chart)
    ratios = np.zeros((len(centers), radii.size))
    for i, c in enumerate(centers):
        dist = chart.distances(c)
        for j, r in enumerate(radii):
            top = dens[dist <= r].max()
            low = u[dist <= ball_factor * r].min()
            ratios[i, j] = top / (r**-2 + np.exp(-2.0 * low))
    return MonitorReport(float(ratios.max()), ratios, list(centers), radii)


def _default_centers(chart, per_axis: int = 5) -> list:
    axes = [np.unique(np.round(np.linspace(0, s - 1, per_axis)).astype(int)) for s in chart.shape]
    if chart.ndim > 2:
        axes = [axes[0], axes[1]] + [np.array([s // 2]) for s in chart.shape[2:]]
    grid = np.meshgrid(*axes, indexing="ij")
    return [tuple(int(g.flat[i]) for g in grid) for i in range(grid[0].size)]
