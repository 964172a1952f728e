"""Elementary symmetric functions, admissibility cones and curvature functions.

Two families of curvature function F are supported:

* ``sigma_k_root``: F = sigma_k ** (1/k) on the cone Gamma_k.
* ``ricci_det``: F(lam) = sigma_n(mu) ** (1/n) with mu = (n-2) lam + sum(lam),
  i.e. the n-th root of the determinant of the Ricci tensor written in
  terms of Schouten eigenvalues. Its cone is {mu > 0}, which coincides with
  Sigma_theta for theta = 1/(n-2).

All evaluators are vectorised over leading axes; eigenvalue tuples live on
the last axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np


class DomainError(ValueError):
    """Raised when a curvature function is evaluated outside its cone."""


def _as_tuple(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim == 0:
        raise ValueError("eigenvalue tuple must be at least 1-D")
    if not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalue tuple has non-finite entries")
    return lam


_SPLITTER = 134217729.0  # 2^27 + 1


def _two_sum(a, b):
    s = a + b
    bv = s - a
    return s, (a - (s - bv)) + (b - bv)


def _two_prod(a, b):
    p = a * b
    ca, cb = _SPLITTER * a, _SPLITTER * b
    a_hi, b_hi = ca - (ca - a), cb - (cb - b)
    a_lo, b_lo = a - a_hi, b - b_hi
    return p, ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo


def elementary_symmetric(lam) -> np.ndarray:
    """All elementary symmetric polynomials e_0, ..., e_n of ``lam``.

    Coefficients of prod_i (1 + lam_i z) are accumulated one factor at a
    time, O(n^2) per tuple. The rounding error of every multiply-add is
    captured exactly (Dekker product, Knuth sum) and carried in a
    correction array, so the result is as accurate as if it had been
    computed in twice the working precision. This matters for tuples of
    mixed sign, where e_k can be much smaller than its terms. Returns an
    array of shape ``lam.shape[:-1] + (n+1,)``.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    err = np.zeros_like(e)
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i : i + 1]
        lo, hi = slice(0, i + 1), slice(1, i + 2)
        p, p_err = _two_prod(x, e[..., lo])
        total, s_err = _two_sum(e[..., hi], p)
        err[..., hi] = err[..., hi] + x * err[..., lo] + (p_err + s_err)
        e[..., hi] = total
    return e + err


def _check_k(k: int, n: int, lo: int = 1) -> None:
    if not (lo <= k <= n):
        raise ValueError(f"k={k} out of range [{lo}, {n}]")


def sigma_k(lam, k: int):
    """k-th elementary symmetric polynomial of the last axis of ``lam``."""
    lam = _as_tuple(lam)
    _check_k(k, lam.shape[-1])
    return elementary_symmetric(lam)[..., k]


def _sigma_omit(lam: np.ndarray, k: int, omit: tuple[int, ...]) -> np.ndarray:
    if k < 0:
        return np.zeros(lam.shape[:-1])
    rest = np.delete(lam, list(omit), axis=-1)
    if k > rest.shape[-1]:
        return np.zeros(lam.shape[:-1])
    return elementary_symmetric(rest)[..., k]


def sigma_k_gradient(lam, k: int) -> np.ndarray:
    """Gradient of sigma_k: component i is sigma_{k-1} with lam_i removed."""
    lam = _as_tuple(lam)
    n = lam.shape[-1]
    _check_k(k, n)
    return np.stack([_sigma_omit(lam, k - 1, (i,)) for i in range(n)], axis=-1)


def sigma_k_hessian(lam, k: int) -> np.ndarray:
    """Hessian of sigma_k: off-diagonal (i, j) is sigma_{k-2} with i, j removed."""
    lam = _as_tuple(lam)
    n = lam.shape[-1]
    _check_k(k, n)
    hess = np.zeros(lam.shape[:-1] + (n, n))
    for i in range(n):
        for j in range(i + 1, n):
            hij = _sigma_omit(lam, k - 2, (i, j))
            hess[..., i, j] = hij
            hess[..., j, i] = hij
    return hess


# ---------------------------------------------------------------------------
# cones


@dataclass(frozen=True)
class ConeSpec:
    """An open admissibility cone in R^n.

    ``kind`` is one of ``"gamma_k"`` (uses ``k``), ``"sigma_theta"`` (uses
    ``theta``) or ``"ricci_positive"`` ({mu_i > 0}, needs the dimension at
    evaluation time).
    """

    kind: str
    k: int = 0
    theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gamma_k", "sigma_theta", "ricci_positive"):
            raise ValueError(f"unknown cone kind {self.kind!r}")
        if self.kind == "gamma_k" and self.k < 1:
            raise ValueError("gamma_k cone needs k >= 1")

    @classmethod
    def gamma(cls, k: int) -> "ConeSpec":
        return cls("gamma_k", k=k)

    @classmethod
    def sigma_theta(cls, theta: float) -> "ConeSpec":
        return cls("sigma_theta", theta=theta)

    @classmethod
    def ricci_positive(cls) -> "ConeSpec":
        return cls("ricci_positive")

    def inequalities(self, lam) -> np.ndarray:
        """Left-hand sides of the defining strict inequalities (all must be > 0).

        Each entry is made homogeneous of degree one so that the minimum is a
        usable signed margin.
        """
        lam = np.asarray(lam, dtype=float)
        n = lam.shape[-1]
        if self.kind == "gamma_k":
            _check_k(self.k, n)
            e = elementary_symmetric(lam)[..., 1 : self.k + 1]
            powers = 1.0 / np.arange(1, self.k + 1)
            return np.sign(e) * np.abs(e) ** powers
        if self.kind == "sigma_theta":
            return (lam.min(axis=-1) + self.theta * lam.sum(axis=-1))[..., None]
        return ricci_eigenvalues(lam)

    def margin(self, lam) -> np.ndarray:
        return self.inequalities(lam).min(axis=-1)

    def describe_violation(self, lam) -> str:
        ineq = np.atleast_2d(self.inequalities(lam))
        bad = np.argwhere(ineq <= 0)
        row, col = bad[0]
        if self.kind == "gamma_k":
            what = f"sigma_{col + 1}(lam) > 0"
        elif self.kind == "sigma_theta":
            what = f"min(lam) + {self.theta:g} * sum(lam) > 0"
        else:
            what = f"mu_{col + 1} = (n-2) lam_{col + 1} + sum(lam) > 0"
        return f"{len(np.unique(bad[:, 0]))} tuple(s) violate {what} (value {ineq[row, col]:.3e})"


def cone_contains(lam, cone: ConeSpec):
    """True where every defining inequality of ``cone`` holds strictly."""
    return np.all(cone.inequalities(lam) > 0, axis=-1)


def ricci_eigenvalues(lam) -> np.ndarray:
    """mu = (n-2) lam + sum(lam), the Ricci eigenvalues for Schouten eigenvalues lam."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    return (n - 2) * lam + lam.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# curvature functions


FAMILIES = ("sigma_k_root", "ricci_det")


@dataclass
class SymFuncSpec:
    """A curvature function F together with its cone and Newton-Maclaurin constant.

    ``epsilon_c5`` is empty until :func:`verify_conditions` certifies it on a
    sample set.
    """

    family: str
    n: int
    k: int | None = None
    rho: float = field(init=False)
    epsilon_c5: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 3:
            raise ValueError(f"dimension n={self.n} must be >= 3")
        if self.family == "sigma_k_root":
            if self.k is None:
                raise ValueError("sigma_k_root needs k")
            _check_k(self.k, self.n)
            self.rho = comb(self.n, self.k) ** (1.0 / self.k) / self.n
        else:
            self.k = None
            self.rho = (2.0 * self.n - 2.0) / self.n

    @classmethod
    def sigma_k_root(cls, n: int, k: int) -> "SymFuncSpec":
        return cls("sigma_k_root", n, k)

    @classmethod
    def ricci_det(cls, n: int) -> "SymFuncSpec":
        return cls("ricci_det", n)

    @property
    def cone(self) -> ConeSpec:
        if self.family == "sigma_k_root":
            return ConeSpec.gamma(self.k)
        return ConeSpec.ricci_positive()

    @property
    def label(self) -> str:
        if self.family == "sigma_k_root":
            return f"sigma_{self.k}^(1/{self.k}), n={self.n}"
        return f"ricci_det, n={self.n}"

    # duck-typed evaluator interface used by verify_conditions
    def value(self, lam):
        return f_eval(self, lam)

    def gradient(self, lam):
        return f_gradient(self, lam)

    def hessian(self, lam):
        return f_hessian(self, lam)


def _checked(spec: SymFuncSpec, lam) -> np.ndarray:
    lam = _as_tuple(lam)
    if lam.shape[-1] != spec.n:
        raise ValueError(f"expected {spec.n} eigenvalues, got {lam.shape[-1]}")
    inside = cone_contains(lam, spec.cone)
    if not np.all(inside):
        raise DomainError(f"{spec.label}: " + spec.cone.describe_violation(lam))
    return lam


def f_value_unchecked(spec: SymFuncSpec, lam: np.ndarray) -> np.ndarray:
    """F on sorted input without the cone check (caller guarantees admissibility)."""
    lam = np.sort(lam, axis=-1)
    if spec.family == "sigma_k_root":
        s = elementary_symmetric(lam)[..., spec.k]
        return s if spec.k == 1 else s ** (1.0 / spec.k)
    mu = ricci_eigenvalues(lam)
    return np.exp(np.log(mu).mean(axis=-1))


def f_gradient_unchecked(spec: SymFuncSpec, lam: np.ndarray) -> np.ndarray:
    n = spec.n
    if spec.family == "sigma_k_root":
        k = spec.k
        if k == 1:
            return np.ones_like(lam)
        s = elementary_symmetric(lam)[..., k]
        return (s ** (1.0 / k - 1.0) / k)[..., None] * sigma_k_gradient(lam, k)
    mu = ricci_eigenvalues(lam)
    g = np.exp(np.log(mu).mean(axis=-1))
    dg = g[..., None] / (n * mu)
    return (n - 2) * dg + dg.sum(axis=-1, keepdims=True)


def f_eval(spec: SymFuncSpec, lam):
    """Evaluate F; raises :class:`DomainError` outside the spec's cone.

    The input is sorted before evaluation so permuted tuples give bitwise
    identical values.
    """
    return f_value_unchecked(spec, _checked(spec, lam))


def f_gradient(spec: SymFuncSpec, lam) -> np.ndarray:
    """dF/dlam_i, in the order of the input tuple."""
    return f_gradient_unchecked(spec, _checked(spec, lam))


def f_hessian(spec: SymFuncSpec, lam) -> np.ndarray:
    """Second derivatives d^2F/dlam_i dlam_j, shape ``lam.shape + (n,)``."""
    lam = _checked(spec, lam)
    n = spec.n
    if spec.family == "sigma_k_root":
        k = spec.k
        if k == 1:
            return np.zeros(lam.shape + (n,))
        s = elementary_symmetric(lam)[..., k][..., None, None]
        ds = sigma_k_gradient(lam, k)
        hs = sigma_k_hessian(lam, k)
        outer = ds[..., :, None] * ds[..., None, :]
        return s ** (1.0 / k - 1.0) / k * hs + (1.0 / k) * (1.0 / k - 1.0) * s ** (1.0 / k - 2.0) * outer
    mu = ricci_eigenvalues(lam)
    g = np.exp(np.log(mu).mean(axis=-1))[..., None, None]
    inv = 1.0 / mu
    hg = g / n**2 * inv[..., :, None] * inv[..., None, :]
    hg = hg - g / n * np.einsum("...i,ij->...ij", inv**2, np.eye(n))
    t = (n - 2) * np.eye(n) + np.ones((n, n))
    return t @ hg @ t


# ---------------------------------------------------------------------------
# structural conditions


CONDITIONS = ("C1", "C2", "C3", "C4", "C5", "C6")


@dataclass
class ConditionReport:
    label: str
    n_samples: int
    n_drawn: int
    passed: dict
    epsilon: float
    rho: float
    max_f_over_sigma1: float
    f_at_ones: float
    max_hessian_eig: float
    max_euler_rel: float
    max_boundary_ratio: float

    @property
    def all_passed(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n_samples": self.n_samples,
            "n_drawn": self.n_drawn,
            "passed": dict(self.passed),
            "all_passed": self.all_passed,
            "epsilon_c5": self.epsilon,
            "rho": self.rho,
            "max_f_over_sigma1": self.max_f_over_sigma1,
            "f_at_ones": self.f_at_ones,
            "max_hessian_eig": self.max_hessian_eig,
            "max_euler_rel": self.max_euler_rel,
            "max_boundary_ratio": self.max_boundary_ratio,
        }


def sample_cone(cone: ConeSpec, n: int, count: int, rng, shift: float = 1.0, scale: float = 1.0):
    """Rejection-sample ``count`` points of ``cone`` from N(shift, scale^2) in R^n."""
    out = []
    drawn = 0
    while sum(len(o) for o in out) < count:
        batch = shift + scale * rng.standard_normal((max(2 * count, 64), n))
        drawn += len(batch)
        out.append(batch[cone_contains(batch, cone)])
    return np.concatenate(out)[:count], drawn


def _boundary_point(cone: ConeSpec, lam: np.ndarray, iters: int = 44) -> np.ndarray:
    """Bisect the segment from ``lam`` towards -|lam| 1 for the cone boundary; returns the inside end."""
    outside = -np.linalg.norm(lam) * np.ones_like(lam)
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if cone_contains((1 - mid) * lam + mid * outside, cone):
            lo = mid
        else:
            hi = mid
    return (1 - lo) * lam + lo * outside


def verify_conditions(spec, sample_count: int = 1000, seed=0,
                      concavity_tol: float = 1e-10, euler_tol: float = 1e-8,
                      c6_tol: float = 1e-12, boundary_checks: int = 50) -> ConditionReport:
    """Numerically check the structural conditions C1-C6 on random cone samples.

    ``spec`` can be a :class:`SymFuncSpec` or any object exposing ``n``,
    ``rho``, ``cone``, ``value``, ``gradient`` and ``hessian``.

    C1 positivity, plus F at a bisected boundary point below 0.1 times F at
    the sample it came from. C2 Hessian eigenvalues <= ``concavity_tol``.
    C3 bitwise invariance under a random permutation. C4 Euler relation.
    C5 empirical epsilon = min dF_i sigma_1 / F, which must be positive.
    C6 max F / sigma_1 <= rho and F(1,...,1) = n rho.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    n = spec.n
    lam, drawn = sample_cone(spec.cone, n, sample_count, rng)

    f = np.asarray(spec.value(lam))
    grad = np.asarray(spec.gradient(lam))
    hess = np.asarray(spec.hessian(lam))
    s1 = lam.sum(axis=-1)

    nb = min(boundary_checks, len(lam))
    ratios = np.array([
        float(spec.value(_boundary_point(spec.cone, lam[i]))) / f[i] for i in range(nb)
    ])
    c1 = bool(np.all(f > 0) and np.all(ratios < 0.1))

    max_eig = float(np.linalg.eigvalsh(hess).max())
    c2 = max_eig <= concavity_tol

    perm = np.array([rng.permutation(n) for _ in range(len(lam))])
    permuted = np.take_along_axis(lam, perm, axis=-1)
    c3 = bool(np.array_equal(np.asarray(spec.value(permuted)), f))

    euler = np.abs((lam * grad).sum(axis=-1) - f) / np.abs(f)
    c4 = bool(euler.max() <= euler_tol)

    eps = float((grad * (s1 / f)[:, None]).min())
    c5 = eps > 0

    ratio = f / s1
    f1 = float(spec.value(np.ones(n)))
    c6 = bool(ratio.max() <= spec.rho + c6_tol and abs(f1 - n * spec.rho) <= 1e-12 * n * spec.rho)

    if isinstance(spec, SymFuncSpec) and c5:
        spec.epsilon_c5 = eps

    label = getattr(spec, "label", type(spec).__name__)
    return ConditionReport(
        label=label,
        n_samples=len(lam),
        n_drawn=drawn,
        passed={"C1": c1, "C2": c2, "C3": c3, "C4": c4, "C5": c5, "C6": c6},
        epsilon=eps,
        rho=float(spec.rho),
        max_f_over_sigma1=float(ratio.max()),
        f_at_ones=f1,
        max_hessian_eig=max_eig,
        max_euler_rel=float(euler.max()),
        max_boundary_ratio=float(ratios.max()) if nb else 0.0,
    )
