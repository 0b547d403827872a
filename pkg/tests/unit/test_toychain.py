"""Tests for the self-repelling two-state chain."""

import logging

import numpy as np
import pytest

from sidlab.toychain import (
    ChainParams,
    exit_survival,
    exponent_spread,
    occupancy_ode,
    sample_exit_times,
)


class TestChainParams:
    """Test cases for ChainParams."""

    def test_validation(self) -> None:
        """Test the parameter constraints."""
        with pytest.raises(ValueError):
            ChainParams(0.0, 1.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            ChainParams(1.0, 1.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            ChainParams(1.0, 1.0, 0.2, 0.0)

    def test_rates(self) -> None:
        """Test the hazard and return rates at the extremes of x."""
        params = ChainParams(1.0, 1.0, 0.4, 0.1)

        assert params.hazard(1.0) == pytest.approx(np.exp(-6.0))
        assert params.hazard(0.5) == pytest.approx(np.exp(-10.0))
        assert params.return_rate(1.0) == pytest.approx(np.exp(-14.0))

    def test_symmetric_equilibrium(self) -> None:
        """Test that x = 1/2 is at rest for a symmetric chain."""
        params = ChainParams(1.0, 1.0, 0.4, 0.1)

        assert params.velocity(0.5) == pytest.approx(0.0, abs=1e-20)
        assert params.symmetric
        assert not ChainParams(1.0, 0.8, 0.4, 0.1).symmetric


class TestOccupancy:
    """Test cases for occupancy_ode and exit_survival."""

    def test_linear_chain(self) -> None:
        """Test x(t) = ½ + ½e^{−2rt} when there is no self-interaction."""
        params = ChainParams(1.0, 1.0, 0.0, 0.25)
        rate = np.exp(-4.0)
        path = occupancy_ode(params, horizon=2.0 / rate)

        expected = 0.5 + 0.5 * np.exp(-2.0 * rate * path.times)
        assert path.occupancy == pytest.approx(expected, abs=1e-7)
        assert path.horizon == pytest.approx(2.0 / rate)

    def test_linear_chain_rk4(self) -> None:
        """Test the fixed-step RK4 solve against the closed form on a uniform grid."""
        params = ChainParams(1.0, 1.0, 0.0, 0.25)
        rate = np.exp(-4.0)
        path = occupancy_ode(params, horizon=2.0 / rate, method="rk4", dt=1.0)

        expected = 0.5 + 0.5 * np.exp(-2.0 * rate * path.times)
        assert path.occupancy == pytest.approx(expected, abs=1e-9)
        assert np.diff(path.times)[:-1] == pytest.approx(1.0)
        assert path.horizon == pytest.approx(2.0 / rate)

    def test_rk4_needs_horizon(self) -> None:
        """Test that the fixed-step solve refuses an open horizon."""
        with pytest.raises(ValueError, match="horizon"):
            occupancy_ode(ChainParams(1.0, 1.0, 0.0, 0.25), method="rk4")

    def test_exponential_survival(self) -> None:
        """Test P(τ > t) = e^{−rt} for a constant hazard."""
        params = ChainParams(1.0, 1.0, 0.0, 0.25)
        rate = np.exp(-4.0)

        survival = exit_survival(params, [0.0, 1.0 / rate, 3.0 / rate])

        assert survival == pytest.approx([1.0, np.exp(-1.0), np.exp(-3.0)], rel=1e-6)

    def test_hazard_exhausted(self) -> None:
        """Test that the default horizon carries almost all of the exit mass."""
        path = occupancy_ode(ChainParams(1.0, 1.0, 0.4, 0.1))

        assert path.cumulative_hazard[-1] == pytest.approx(50.0, rel=1e-3)
        assert np.all(np.diff(path.cumulative_hazard) >= 0.0)

    def test_self_repulsion_slows_exit(self) -> None:
        """Test that survival decreases and lies between the extreme constant hazards."""
        params = ChainParams(1.0, 1.0, 0.4, 0.1)
        path = occupancy_ode(params)
        t = path.times[1:-1:400]

        survival = exit_survival(params, t, path)

        assert np.all(np.diff(survival) <= 0.0)
        assert np.all(survival >= np.exp(-params.hazard(1.0) * t) - 1e-12)
        assert np.all(survival <= np.exp(-params.hazard(0.0) * t) + 1e-12)

    def test_survival_outside_horizon(self) -> None:
        """Test that survival beyond the solved horizon is refused."""
        params = ChainParams(1.0, 1.0, 0.0, 0.25)
        path = occupancy_ode(params, horizon=10.0)

        with pytest.raises(ValueError):
            exit_survival(params, 20.0, path)

    def test_start_must_be_probability(self) -> None:
        """Test that x0 lies in [0, 1]."""
        with pytest.raises(ValueError):
            occupancy_ode(ChainParams(1.0, 1.0, 0.0, 0.25), x0=1.5)


class TestExitSampling:
    """Test cases for sample_exit_times and exponent_spread."""

    def test_exponential_mean(self) -> None:
        """Test the mean exit time 1/r of the non-interacting chain."""
        params = ChainParams(1.0, 1.0, 0.0, 0.25)

        times = sample_exit_times(params, 20_000, seed=3)

        assert times.mean() == pytest.approx(np.exp(4.0), rel=0.03)
        assert np.all(times > 0.0)

    def test_seed_reproducible(self) -> None:
        """Test that a seed fixes the draws."""
        params = ChainParams(1.0, 1.0, 0.4, 0.1)
        path = occupancy_ode(params)

        first = sample_exit_times(params, 100, seed=1, path=path)
        second = sample_exit_times(params, 100, seed=1, path=path)

        assert np.array_equal(first, second)

    def test_control_concentrates(self) -> None:
        """Test that without interaction σ² log τ concentrates at the barrier."""
        params = ChainParams(1.0, 1.0, 0.0, 0.02)

        spread = exponent_spread(params, [0.02], 4000, seed=5)

        assert spread.mass(0.02, 1.0) > 0.95

    def test_self_repulsion_spreads(self) -> None:
        """Test that σ² log τ keeps mass on several exponents at moderate noise."""
        params = ChainParams(1.0, 1.0, 0.4, 0.08)

        spread = exponent_spread(params, [0.08], 4000, seed=6)

        assert spread.centers == pytest.approx([0.6, 0.7, 0.8, 0.9, 1.0])
        assert spread.mass(0.08, 0.7) > 0.02
        assert spread.mass(0.08, 0.9) > 0.02
        assert spread.outside[0] < 0.5

    def test_histogram(self) -> None:
        """Test the shared-bin histogram of the scaled samples."""
        params = ChainParams(1.0, 1.0, 0.4, 0.2)
        spread = exponent_spread(params, [0.3, 0.2], 500, seed=7)

        edges, densities = spread.histogram(bins=20)

        assert edges.size == 21
        assert len(densities) == 2
        assert all(d.size == 20 for d in densities)
        assert spread.to_dict()["window"] == 0.1

    def test_asymmetric_warning(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test that asymmetric chains are flagged."""
        params = ChainParams(1.0, 0.8, 0.4, 0.3)

        with caplog.at_level(logging.WARNING, logger="sidlab.toychain"):
            exponent_spread(params, [0.3], 50, seed=8)

        assert "symmetric" in caplog.text
