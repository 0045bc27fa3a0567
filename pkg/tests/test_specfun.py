from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

from fracopt.errors import GammaPoleError, MittagLefflerError
from fracopt.specfun import MlSeriesConfig, gamma, mittag_leffler

SQRT_PI = 1.7724538509055160


class TestGamma:
    def test_factorials(self):
        assert gamma(1.0) == 1.0
        assert gamma(5.0) == 24.0

    def test_half(self):
        assert gamma(0.5) == pytest.approx(SQRT_PI, abs=1e-15)

    @pytest.mark.parametrize("pole", [0.0, -1.0, -2.0, -37.0])
    def test_poles_raise(self, pole):
        with pytest.raises(GammaPoleError) as err:
            gamma(pole)
        assert f"{pole:g}" in str(err.value)

    def test_recurrence(self, rng):
        xs = rng.uniform(0.1, 20.0, 200)
        for x in xs:
            assert abs(gamma(x + 1.0) - x * gamma(x)) / gamma(x + 1.0) <= 1e-12

    def test_twelve_digits_on_range(self, rng):
        # reference values from arbitrary-precision evaluation
        xs = list(rng.uniform(-170.0, 170.0, 60)) + [-169.5, -0.5, 150.25, 170.0]
        with mpmath.workdps(40):
            for x in xs:
                if x <= 0 and float(x).is_integer():
                    continue
                ref = float(mpmath.gamma(x))
                assert gamma(float(x)) == pytest.approx(ref, rel=1e-12)


class TestMittagLeffler:
    def test_exponential_point(self):
        assert mittag_leffler(1.0, 1.0, 1.0) == pytest.approx(math.e, abs=1e-12)

    def test_zero_argument_normalization(self):
        assert mittag_leffler(0.9, 1.0, 0.0) == 1.0
        assert mittag_leffler(0.7, 2.0, 0.0) == pytest.approx(1.0 / gamma(2.0), abs=0)

    def test_cosine_zero(self):
        z = -((math.pi / 2.0) ** 2)
        assert abs(mittag_leffler(2.0, 1.0, z)) <= 1e-10

    def test_exponential_identity(self):
        for t in np.arange(0.0, 5.01, 0.1):
            assert abs(mittag_leffler(1.0, 1.0, -t) - math.exp(-t)) <= 1e-10

    def test_cosine_identity(self):
        for t in np.arange(0.0, 5.01, 0.25):
            assert abs(mittag_leffler(2.0, 1.0, -t * t) - math.cos(t)) <= 1e-9

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9, 1.0])
    def test_monotone_decay_on_unit_interval_orders(self, alpha):
        ts = np.arange(0.1, 20.01, 0.1)
        values = [mittag_leffler(alpha, 1.0, -(t**alpha)) for t in ts]
        assert all(0.0 < v <= 1.0 for v in values)
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_radius_rejection(self):
        with pytest.raises(MittagLefflerError):
            mittag_leffler(0.9, 1.0, -60.0)
        cfg = MlSeriesConfig(argument_switch_radius=10.0)
        with pytest.raises(MittagLefflerError):
            mittag_leffler(0.9, 1.0, -11.0, cfg)

    def test_max_terms_exhaustion_reports_tolerance(self):
        cfg = MlSeriesConfig(max_terms=20)
        with pytest.raises(MittagLefflerError) as err:
            mittag_leffler(1.0, 1.0, -5.0, cfg)
        assert math.isfinite(err.value.achieved_tolerance)
        assert err.value.achieved_tolerance > 1e-15

    def test_positive_overflow_rejected(self):
        with pytest.raises(MittagLefflerError):
            mittag_leffler(0.5, 1.0, 50.0, MlSeriesConfig(max_terms=100000))

    def test_large_positive_argument_within_range(self):
        assert mittag_leffler(1.0, 1.0, 20.0) == pytest.approx(math.exp(20.0), rel=1e-12)

    def test_against_reference_values(self, rng):
        # arbitrary-precision series as the independent oracle; small orders
        # only admit small arguments before the term count explodes
        for _ in range(25):
            alpha = rng.uniform(0.3, 2.0)
            beta = rng.choice([1.0, 2.0])
            z = rng.uniform(-30.0 if alpha >= 0.6 else -5.0, 3.0)
            with mpmath.workdps(60):
                ref = mpmath.nsum(
                    lambda k: mpmath.mpf(z) ** k / mpmath.gamma(alpha * k + beta),
                    [0, mpmath.inf],
                )
            assert mittag_leffler(alpha, beta, z) == pytest.approx(
                float(ref), abs=1e-10
            )

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            mittag_leffler(0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            mittag_leffler(0.9, -1.0, 0.5)
        with pytest.raises(ValueError):
            MlSeriesConfig(term_tolerance=0.0)
        with pytest.raises(ValueError):
            MlSeriesConfig(max_terms=0)
        with pytest.raises(ValueError):
            MlSeriesConfig(argument_switch_radius=-1.0)
