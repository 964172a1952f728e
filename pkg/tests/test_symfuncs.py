import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import sigma_k_bruteforce
from schouten.symfuncs import (
    ConeSpec,
    DomainError,
    SymFuncSpec,
    cone_contains,
    elementary_symmetric,
    f_eval,
    f_gradient,
    f_hessian,
    sigma_k,
    sigma_k_gradient,
    sigma_k_hessian,
    verify_conditions,
)

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


class TestSigmaK:
    def test_examples(self):
        assert sigma_k([1, 1, 1], 2) == 3.0
        assert sigma_k([1, 2, 3], 2) == 11.0
        assert sigma_k([0.3, -1.2, 2.5, 0.0], 4) == 0.0

    def test_elementary_vector(self):
        np.testing.assert_allclose(elementary_symmetric([1, 2, 3]), [1, 6, 11, 6])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(finite, min_size=1, max_size=8), st.data())
    def test_matches_bruteforce(self, lam, data):
        k = data.draw(st.integers(1, len(lam)))
        scale = max(1.0, sigma_k_bruteforce(np.abs(lam), k))
        assert abs(sigma_k(lam, k) - sigma_k_bruteforce(lam, k)) <= 1e-12 * scale

    def test_batched(self, rng):
        lam = rng.normal(size=(5, 4))
        out = sigma_k(lam, 3)
        assert out.shape == (5,)
        np.testing.assert_allclose(out, [sigma_k_bruteforce(row, 3) for row in lam], rtol=1e-13)

    def test_gradient_examples(self):
        np.testing.assert_allclose(sigma_k_gradient([1, 1, 1], 3), [1, 1, 1])
        np.testing.assert_allclose(sigma_k_gradient([1, 2, 3], 2), [5, 4, 3])
        np.testing.assert_allclose(sigma_k_gradient([0.3, -2.0, 7.0], 1), [1, 1, 1])

    def test_gradient_and_hessian_vs_differences(self, rng):
        lam = rng.normal(size=5)
        h = 1e-6
        for k in range(1, 6):
            fd = [(sigma_k(lam + h * e, k) - sigma_k(lam - h * e, k)) / (2 * h) for e in np.eye(5)]
            np.testing.assert_allclose(sigma_k_gradient(lam, k), fd, atol=1e-7)
            fdh = [(sigma_k_gradient(lam + h * e, k) - sigma_k_gradient(lam - h * e, k)) / (2 * h) for e in np.eye(5)]
            np.testing.assert_allclose(sigma_k_hessian(lam, k), np.array(fdh), atol=1e-6)

    @pytest.mark.parametrize("k", [0, 4, -1])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            sigma_k([1, 2, 3], k)


class TestCones:
    def test_examples(self):
        assert cone_contains([1, 1, 1], ConeSpec.gamma(3))
        assert not cone_contains([-1, 1, 1], ConeSpec.gamma(2))
        assert cone_contains([-0.2, 0.3, 0.3], ConeSpec.sigma_theta(1.0))

    def test_nesting(self, rng):
        lam = rng.normal(0.5, 1.0, size=(2000, 4))
        inside = [cone_contains(lam, ConeSpec.gamma(k)) for k in range(1, 5)]
        for a, b in zip(inside[1:], inside[:-1]):
            assert np.all(~a | b)

    def test_ricci_positive_is_sigma_theta(self, rng):
        # Ric > 0 for lam(A) means (n-2) lam_i + sum lam > 0, i.e. Sigma_{1/(n-2)}
        n = 5
        lam = rng.normal(0.3, 1.0, size=(2000, n))
        a = cone_contains(lam, ConeSpec.ricci_positive())
        b = cone_contains(lam, ConeSpec.sigma_theta(1.0 / (n - 2)))
        np.testing.assert_array_equal(a, b)

    def test_violation_message(self):
        with pytest.raises(DomainError, match="sigma_2"):
            f_eval(SymFuncSpec.sigma_k_root(3, 2), [-1.0, 1.0, 1.0])


class TestSymFunc:
    def test_values(self):
        assert f_eval(SymFuncSpec.ricci_det(3), [1, 1, 1]) == pytest.approx(4.0, rel=1e-15)
        assert f_eval(SymFuncSpec.sigma_k_root(3, 2), [1, 1, 1]) == pytest.approx(np.sqrt(3), rel=1e-15)
        assert f_eval(SymFuncSpec.ricci_det(3), [0.5, 0.5, 0.5]) == pytest.approx(2.0, rel=1e-15)

    @pytest.mark.parametrize("n", [3, 4, 6])
    def test_rho(self, n):
        assert SymFuncSpec.ricci_det(n).rho == pytest.approx((2 * n - 2) / n)
        spec = SymFuncSpec.sigma_k_root(n, 2)
        assert f_eval(spec, np.ones(n)) == pytest.approx(n * spec.rho)

    def test_ricci_det_formula(self, rng):
        # det^{1/n} of the Ricci eigenvalues (n-2) lam_i + sum lam
        n = 4
        lam = np.array([0.3, 0.9, 0.2, 1.4])
        mu = (n - 2) * lam + lam.sum()
        assert f_eval(SymFuncSpec.ricci_det(n), lam) == pytest.approx(np.prod(mu) ** (1 / n), rel=1e-14)

    def test_gradient_example(self):
        np.testing.assert_allclose(f_gradient(SymFuncSpec.ricci_det(3), [1, 1, 1]), [4 / 3] * 3, rtol=1e-14)

    def test_linear_hessian_zero(self):
        np.testing.assert_array_equal(f_hessian(SymFuncSpec.sigma_k_root(4, 1), [1, 2, 3, 4]), np.zeros((4, 4)))

    @pytest.mark.parametrize("spec", [SymFuncSpec.ricci_det(4), SymFuncSpec.sigma_k_root(4, 2),
                                      SymFuncSpec.sigma_k_root(4, 4)])
    def test_derivatives_vs_differences(self, spec, rng):
        lam = np.array([0.7, 1.1, 0.4, 1.6])
        h = 1e-6
        fd = [(f_eval(spec, lam + h * e) - f_eval(spec, lam - h * e)) / (2 * h) for e in np.eye(4)]
        np.testing.assert_allclose(f_gradient(spec, lam), fd, atol=1e-8)
        fdh = np.array([(f_gradient(spec, lam + h * e) - f_gradient(spec, lam - h * e)) / (2 * h) for e in np.eye(4)])
        np.testing.assert_allclose(f_hessian(spec, lam), fdh, atol=1e-6)

    def test_gradient_follows_input_order(self):
        spec = SymFuncSpec.sigma_k_root(3, 2)
        lam = np.array([3.0, 1.0, 2.0])
        g = f_gradient(spec, lam)
        perm = np.array([1, 2, 0])
        np.testing.assert_allclose(f_gradient(spec, lam[perm]), g[perm], rtol=1e-15)

    def test_permutation_bitwise(self, rng):
        spec = SymFuncSpec.ricci_det(5)
        lam = rng.uniform(0.5, 2.0, size=5)
        assert f_eval(spec, lam) == f_eval(spec, rng.permutation(lam))

    def test_boundary_is_domain_error(self):
        with pytest.raises(DomainError):
            f_eval(SymFuncSpec.sigma_k_root(3, 3), [1.0, 1.0, 0.0])

    @pytest.mark.parametrize("bad", [("sigma_k_root", 3, 5), ("sigma_k_root", 3, None), ("nope", 3, 1),
                                     ("ricci_det", 2, None)])
    def test_bad_specs(self, bad):
        with pytest.raises(ValueError):
            SymFuncSpec(*bad)


class TestVerifyConditions:
    def test_ricci_det(self):
        rep = verify_conditions(SymFuncSpec.ricci_det(3), 1000, seed=1)
        assert rep.all_passed, rep.passed
        assert rep.max_f_over_sigma1 <= 4 / 3 + 1e-12
        assert rep.epsilon > 0

    def test_sigma_n(self):
        rep = verify_conditions(SymFuncSpec.sigma_k_root(4, 4), 500, seed=2)
        assert rep.passed["C2"]

    def test_sigma_2_n4(self):
        assert verify_conditions(SymFuncSpec.sigma_k_root(4, 2), 500, seed=3).all_passed

    def test_detects_convex_function(self):
        class Convex:
            n, rho, cone = 3, 1.0, ConeSpec.gamma(1)

            def value(self, lam):
                lam = np.asarray(lam)
                return np.sqrt((lam**2).sum(-1))

            def gradient(self, lam):
                lam = np.asarray(lam)
                return lam / self.value(lam)[..., None]

            def hessian(self, lam):
                lam = np.asarray(lam)
                r = self.value(lam)[..., None, None]
                return (np.eye(3) - lam[..., :, None] * lam[..., None, :] / r**2) / r

        rep = verify_conditions(Convex(), 300, seed=0)
        assert not rep.passed["C2"]
        assert not rep.all_passed

    def test_deterministic(self):
        a = verify_conditions(SymFuncSpec.ricci_det(4), 200, seed=5).to_dict()
        b = verify_conditions(SymFuncSpec.ricci_det(4), 200, seed=5).to_dict()
        assert a == b
