import math

import numpy as np
import pytest

from cppm.pricing import _delay_exponential_grid, delay_exponential


def integrate_delayed_growth(c: float, tau: float, t: float, n_per_window: int = 16384) -> float:
    """Independent oracle: march phi'(x) = c * phi(x - tau), phi = 1 on x <= 0.

    Window-by-window trapezoid with Richardson extrapolation; the delayed
    argument always falls on grid nodes of the previous window.
    """

    def march(n: int) -> float:
        if t == 0:
            return 1.0
        h = tau / n
        n_windows = int(math.ceil(t / tau - 1e-12))
        hist = np.ones(n + 1)  # samples on the previous window
        value = 1.0
        for w in range(n_windows):
            incr = np.concatenate([[0.0], np.cumsum((hist[1:] + hist[:-1]) * (0.5 * h * c))])
            window = value + incr
            end = (w + 1) * tau
            if end >= t:
                pos = (t - w * tau) / h
                j = min(int(pos), n - 1)
                frac = pos - j
                return window[j] * (1 - frac) + window[j + 1] * frac
            hist = window
            value = window[-1]
        return value

    coarse, fine = march(n_per_window), march(2 * n_per_window)
    return (4.0 * fine - coarse) / 3.0


class TestClosedForm:
    def test_zero_time(self):
        assert delay_exponential(2.0, 0.3, 0.0) == 1.0

    def test_single_term_regime(self):
        # before the first delay kicks in the growth is linear
        assert delay_exponential(2.0, 0.3, 0.2) == pytest.approx(1.0 + 2.0 * 0.2, abs=1e-14)
        assert delay_exponential(200.0, 0.5, 0.495) == pytest.approx(100.0, abs=1e-10)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            delay_exponential(2.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            delay_exponential(-1.0, 0.3, 1.0)
        with pytest.raises(ValueError):
            delay_exponential(2.0, 0.3, -0.1)

    def test_matches_integrator(self):
        value = delay_exponential(2.0, 0.3, 1.0)
        oracle = integrate_delayed_growth(2.0, 0.3, 1.0)
        assert value == pytest.approx(oracle, abs=1e-6)

    @pytest.mark.parametrize("c,tau,t", [
        (0.5, 0.9, 1.0),
        (10.0, 0.05, 0.7),
        (4.0, 0.25, 0.99),
        (7.3, 0.11, 0.5),
    ])
    def test_integrator_agreement_spots(self, c, tau, t):
        assert delay_exponential(c, tau, t) == pytest.approx(
            integrate_delayed_growth(c, tau, t), abs=1e-6)

    def test_vectorized_matches_scalar(self):
        t = np.linspace(0.0, 1.0, 57)
        grid = _delay_exponential_grid(3.7, 0.21, t)
        for ti, gi in zip(t, grid):
            assert gi == pytest.approx(delay_exponential(3.7, 0.21, float(ti)), rel=1e-13)

    def test_tiny_delay_no_overflow(self):
        # with a vanishing delay the value approaches the plain exponential
        c, tau, t = 5.6, 1e-4, 0.56
        val = delay_exponential(c, tau, t)
        assert 0.9 * math.exp(c * t) < val <= math.exp(c * t)
