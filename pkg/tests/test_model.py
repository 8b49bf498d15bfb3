import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfperc import (
    ModelParams,
    WeightDistribution,
    classify_regime,
    distance_constant,
    edge_probability,
    gamma_exponent,
    gamma_function,
    lambda_c_lower_bound,
    laplace_weight,
    lattice_sum,
    min_product_moment,
    reparametrize_unit_lambda,
    unit_ball_volume,
    weight_moment,
    xi_constant,
)
from sfperc.errors import DivergenceError, DomainError, InapplicableBoundError, RegimeError

CONST = WeightDistribution.constant(1.0)


def params(d=1, alpha=2.0, lam=1.0, weights=CONST):
    return ModelParams(d, alpha, lam, weights)


class TestEdgeProbability:
    def test_unit_weights(self):
        assert edge_probability(1, 1, 1, params(alpha=7.3)) == pytest.approx(1 - math.exp(-1), rel=1e-15)

    def test_zero_weight(self):
        assert edge_probability(0, 5.0, 3.0, params()) == 0.0

    def test_distance_two(self):
        assert edge_probability(1, 1, 2, params(lam=2, alpha=2)) == pytest.approx(1 - math.exp(-0.5))

    @given(
        wx=st.floats(0, 1e3), wy=st.floats(0, 1e3), r=st.floats(0.5, 1e3),
        lam=st.floats(1e-6, 1e3), alpha=st.floats(0.1, 10),
    )
    def test_range_and_monotonicity(self, wx, wy, r, lam, alpha):
        p = params(alpha=alpha, lam=lam)
        v = edge_probability(wx, wy, r, p)
        assert 0.0 <= v <= 1.0
        assert edge_probability(wx * 2, wy, r, p) >= v
        assert edge_probability(wx, wy, r * 2, p) <= v
        assert edge_probability(wx, wy, r, p.with_lambda(lam * 2)) >= v


class TestReparametrize:
    def test_constant(self):
        new = reparametrize_unit_lambda(params(lam=4.0))
        assert new.lam == 1.0
        assert new.weights.kind == "constant" and new.weights.value == 2.0
        old = params(lam=4.0)
        for r in (1.0, 2.5, 10.0):
            assert edge_probability(1, 1, r, old) == pytest.approx(edge_probability(2, 2, r, new), abs=1e-15)

    def test_identity(self):
        p = params(weights=WeightDistribution.pareto(2.5))
        assert reparametrize_unit_lambda(p) == p

    def test_pareto_scale(self):
        new = reparametrize_unit_lambda(params(lam=0.25, weights=WeightDistribution.pareto(2.0)))
        assert new.lam == 1.0
        assert new.weights.support_min == pytest.approx(0.5)
        assert new.weights.tau == 2.0

    @given(
        wx=st.floats(0, 100), wy=st.floats(0, 100), r=st.floats(1, 100),
        lam=st.floats(1e-3, 1e3), alpha=st.floats(0.5, 8),
    )
    def test_identity_property(self, wx, wy, r, lam, alpha):
        old = params(alpha=alpha, lam=lam)
        new = reparametrize_unit_lambda(old)
        s = math.sqrt(lam)
        assert abs(edge_probability(wx, wy, r, old) - edge_probability(s * wx, s * wy, r, new)) <= 1e-12


class TestGammaAndRegime:
    def test_gamma(self):
        assert gamma_exponent(params(1, 3, weights=WeightDistribution.pareto(2))) == 3.0
        assert gamma_exponent(params(2, 2.5, weights=WeightDistribution.pareto(2))) == 1.25
        assert gamma_exponent(params()) == math.inf

    def test_infinite_degrees(self):
        rep = classify_regime(params(2, 1.5, weights=WeightDistribution.pareto(2)))
        assert rep.degrees_infinite
        assert rep.citations["degrees_infinite"]

    def test_lambda_c_zero(self):
        rep = classify_regime(params(2, 2.5, weights=WeightDistribution.pareto(2)))
        assert rep.lambda_c_zero == "yes" and rep.lambda_c_finite == "yes"
        assert not rep.degrees_infinite

    def test_lambda_c_infinite_d1(self):
        rep = classify_regime(params(1, 3, weights=WeightDistribution.pareto(4)))
        assert rep.gamma == 9.0
        assert rep.lambda_c_finite == "no"
        assert rep.lambda_c_zero == "no"

    def test_boundary_gamma_two(self):
        rep = classify_regime(params(1, 2, weights=WeightDistribution.pareto(2)))
        assert rep.gamma == 2.0
        assert rep.degree_variance_finite == "boundary"
        assert rep.lambda_c_zero == "boundary"

    @given(d=st.integers(1, 3), alpha=st.floats(0.2, 10), tau=st.floats(1.05, 6))
    def test_every_field_cited(self, d, alpha, tau):
        rep = classify_regime(params(d, alpha, weights=WeightDistribution.pareto(tau)))
        for key in ("degrees_infinite", "lambda_c_zero", "lambda_c_finite"):
            assert rep.citations[key]
        if rep.lambda_c_zero == "yes":
            assert rep.lambda_c_finite == "yes"


class TestMoments:
    def test_pareto(self):
        assert weight_moment(WeightDistribution.pareto(3), 0.5) == pytest.approx(4 / 3, rel=1e-14)
        assert weight_moment(WeightDistribution.pareto(2), 1) == math.inf

    def test_constant(self):
        assert weight_moment(CONST, 3.7) == 1.0

    @given(tau=st.floats(1.1, 8), s=st.floats(0, 10))
    def test_finite_iff(self, tau, s):
        assert math.isfinite(weight_moment(WeightDistribution.pareto(tau), s)) == (s < tau - 1)

    def test_normalized_second_moment(self):
        dist = WeightDistribution.pareto(4, normalize_mean=True)
        assert weight_moment(dist, 1) == pytest.approx(1.0, rel=1e-14)
        assert weight_moment(dist, 2) == pytest.approx(4 / 3, rel=1e-14)


class TestLaplace:
    def test_zero(self):
        assert laplace_weight(WeightDistribution.pareto(2.5), 0.0) == 1.0

    def test_constant(self):
        assert laplace_weight(CONST, 1.0) == pytest.approx(math.exp(-1), rel=1e-15)

    def test_pareto_two(self):
        # e^-1 - E1(1), independently via mpmath
        expected = float(mpmath.e ** -1 - mpmath.e1(1))
        assert laplace_weight(WeightDistribution.pareto(2), 1.0) == pytest.approx(expected, rel=1e-9)
        assert expected == pytest.approx(0.1484955, abs=1e-7)

    @pytest.mark.parametrize("tau,c", [(1.5, 1e-6), (2.2, 0.3), (3.0, 4.0), (4.5, 50.0)])
    def test_against_mpmath(self, tau, c):
        k = tau - 1
        expected = float(mpmath.quad(lambda w: k * w ** (-tau) * mpmath.e ** (-c * w), [1, 10, mpmath.inf]))
        assert laplace_weight(WeightDistribution.pareto(tau), c) == pytest.approx(expected, rel=1e-9)


class TestSpecialFunctions:
    @pytest.mark.parametrize("x,expected", [(1, 1.0), (0.5, math.sqrt(math.pi)), (5, 24.0)])
    def test_gamma(self, x, expected):
        assert gamma_function(x) == pytest.approx(expected, rel=1e-10)

    def test_gamma_domain(self):
        with pytest.raises(DomainError):
            gamma_function(0.0)

    def test_ball_volume(self):
        assert unit_ball_volume(1) == 2.0
        assert unit_ball_volume(2) == math.pi
        assert unit_ball_volume(3) == 4 * math.pi / 3

    @pytest.mark.parametrize("d", range(1, 9))
    def test_ball_volume_formula(self, d):
        assert unit_ball_volume(d) == pytest.approx(math.pi ** (d / 2) / math.gamma(d / 2 + 1), rel=1e-14)


class TestLatticeSum:
    def test_zeta_two(self):
        s = lattice_sum(1, 2.0, 1e-6)
        assert abs(s.value - math.pi**2 / 3) <= 1e-6 * s.value
        assert s.error <= 1e-6 * s.value
        assert abs(s.value - math.pi**2 / 3) <= s.error

    def test_zeta_four(self):
        s = lattice_sum(1, 4.0, 1e-6)
        assert abs(s.value - math.pi**4 / 45) <= s.error

    def test_square_lattice(self):
        # 4 zeta(2) beta(2), beta(2) = Catalan's constant
        expected = float(4 * mpmath.zeta(2) * mpmath.catalan)
        s = lattice_sum(2, 4.0, 1e-6)
        assert abs(s.value - expected) <= s.error
        assert expected == pytest.approx(6.0268120, abs=1e-7)

    def test_divergent(self):
        with pytest.raises(DivergenceError):
            lattice_sum(2, 2.0)


class TestXi:
    def test_pareto(self):
        p = params(weights=WeightDistribution.pareto(3))
        assert xi_constant(p) == pytest.approx(2 * math.sqrt(math.pi) * 4 / 3, rel=1e-12)
        assert xi_constant(p) == pytest.approx(4.7265436, abs=1e-6)

    def test_constant(self):
        assert xi_constant(params()) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-12)

    def test_lambda_scaling(self):
        p = params(weights=WeightDistribution.pareto(3))
        assert xi_constant(p.with_lambda(4.0)) == pytest.approx(2 * xi_constant(p), rel=1e-14)

    def test_divergent(self):
        with pytest.raises(DomainError):
            xi_constant(params(2, 1.5))
        with pytest.raises(DomainError):
            xi_constant(params(1, 2, weights=WeightDistribution.pareto(1.4)))


class TestLambdaCBound:
    def test_constant(self):
        assert lambda_c_lower_bound(params()) == pytest.approx(3 / math.pi**2, rel=1e-6)

    def test_normalized_pareto(self):
        p = params(weights=WeightDistribution.pareto(4, normalize_mean=True))
        assert lambda_c_lower_bound(p) == pytest.approx(1 / (4 / 3 * math.pi**2 / 3), rel=1e-6)
        assert lambda_c_lower_bound(p) == pytest.approx(0.2279727, abs=1e-7)

    def test_infinite_variance(self):
        with pytest.raises(InapplicableBoundError):
            lambda_c_lower_bound(params(weights=WeightDistribution.pareto(2.5)))


class TestDistanceConstant:
    def test_equal(self):
        c = distance_constant(params(1, 3, weights=WeightDistribution.pareto(1.5)))
        assert c.equal
        assert c.upper == c.lower == pytest.approx(2 / math.log(2))

    def test_pair(self):
        # alpha/d = 1.25 and tau = 2.2 give gamma = 1.5 with kappa = 0.25
        c = distance_constant(params(4, 5, weights=WeightDistribution.pareto(2.2)))
        assert c.upper == pytest.approx(2 / math.log(2), rel=1e-12)
        assert c.lower == pytest.approx(2 / abs(math.log(0.25)), rel=1e-12)
        assert c.kappa == pytest.approx(0.25)
        assert not c.equal

    def test_pair_kappa_three_quarters(self):
        # alpha/d = 1.75 and tau = 2.1 give gamma = 1.925 with kappa = 0.75
        c = distance_constant(params(1, 1.75, weights=WeightDistribution.pareto(2.1)))
        assert c.lower == pytest.approx(6.9521190, abs=1e-7)
        assert c.upper == pytest.approx(2 / abs(math.log(0.925)), rel=1e-12)

    def test_diverges_near_two(self):
        near = distance_constant(params(1, 3, weights=WeightDistribution.pareto(1.6666)))
        assert near.upper > 1000

    def test_no_constant_when_degrees_infinite(self):
        with pytest.raises(RegimeError):
            distance_constant(params(1, 1, weights=WeightDistribution.pareto(2.5)))

    def test_regime(self):
        with pytest.raises(RegimeError):
            distance_constant(params(1, 3, weights=WeightDistribution.pareto(4)))


class TestMinProductMoment:
    def test_constant(self):
        assert min_product_moment(CONST, 2.0, 2) == pytest.approx(0.25)
        assert min_product_moment(CONST, 0.5, 1) == 1.0
        assert min_product_moment(CONST, 0.5, 2) == 1.0

    @pytest.mark.parametrize("u,power", [(3.0, 1), (100.0, 2), (1e4, 2)])
    def test_against_mpmath(self, u, power):
        k = 2.0

        def inner(w1):
            # E[min(w1 W / u, 1)^p] with W ~ Pareto(3)
            t = u / w1
            if t <= 1:
                return mpmath.mpf(1)
            body = mpmath.quad(lambda w: (w1 * w / u) ** power * k * w ** (-3), [1, t])
            return body + t ** (-k)

        expected = float(mpmath.quad(lambda w1: inner(w1) * k * w1 ** (-3), [1, u, mpmath.inf]))
        got = min_product_moment(WeightDistribution.pareto(3), u, power)
        assert got == pytest.approx(expected, rel=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(u1=st.floats(0.5, 1e4), f=st.floats(1.0, 10.0), tau=st.floats(1.5, 5))
    def test_nonincreasing(self, u1, f, tau):
        dist = WeightDistribution.pareto(tau)
        assert min_product_moment(dist, u1 * f, 2) <= min_product_moment(dist, u1, 2) * (1 + 1e-9)


def test_params_validation():
    with pytest.raises(DomainError):
        ModelParams(0, 2.0, 1.0, CONST)
    with pytest.raises(DomainError):
        ModelParams(1, -1.0, 1.0, CONST)
    with pytest.raises(DomainError):
        WeightDistribution.pareto(1.0)


def test_weights_quantile_roundtrip():
    dist = WeightDistribution.pareto(2.0)
    assert dist.quantile_from_survival(0.25) == pytest.approx(4.0)
    w = np.array([1.0, 3.0, 17.0])
    assert np.allclose(dist.quantile_from_survival(dist.survival(w)), w)
