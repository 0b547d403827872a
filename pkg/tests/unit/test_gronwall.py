"""Tests for the memory Gronwall envelope."""

import numpy as np
import pytest

from sidlab.gronwall import (
    build_envelope,
    decay_slope,
    integrate_extremal,
    memory_average,
    run_suite,
    verify_domination,
)
from sidlab.model import MemoryKernel


class TestExtremal:
    """Test cases for integrate_extremal and memory_average."""

    def test_dirac_closed_form(self) -> None:
        """Test f = e^{−(α−β)t} for the Dirac kernel."""
        series = integrate_extremal(2.0, 1.0, 0.0, MemoryKernel("dirac"), 1.0, horizon=5.0, dt=0.01)

        assert series.values == pytest.approx(np.exp(-series.times), abs=1e-4)

    def test_plateau(self) -> None:
        """Test that f settles at γ/(α−β)."""
        series = integrate_extremal(3.0, 1.0, 1.0, MemoryKernel("exponential", rate=2.0), 0.0, 40.0, 0.01)

        assert series.values[-1] == pytest.approx(0.5, rel=1e-3)

    def test_rates_checked(self) -> None:
        """Test that α must exceed β."""
        with pytest.raises(ValueError):
            integrate_extremal(1.0, 1.0, 0.0, MemoryKernel("uniform"), 1.0)

    def test_negative_start(self) -> None:
        """Test that f0 must be nonnegative."""
        with pytest.raises(ValueError):
            integrate_extremal(2.0, 1.0, 0.0, MemoryKernel("uniform"), -1.0)

    @pytest.mark.parametrize("kind", ["dirac", "uniform", "exponential"])
    def test_memory_average_of_constant(self, kind: str) -> None:
        """Test that the average of a constant is that constant."""
        times = np.linspace(0.0, 10.0, 501)

        average = memory_average(np.full(times.size, 2.5), times, MemoryKernel(kind))

        assert average == pytest.approx(np.full(times.size, 2.5))


class TestEnvelope:
    """Test cases for build_envelope and verify_domination."""

    def test_dirac_closed_form(self) -> None:
        """Test the exact envelope of the Dirac kernel."""
        envelope = build_envelope(2.0, 0.5, MemoryKernel("dirac"), horizon=10.0, dt=0.1)

        assert envelope.method == "closed-form"
        assert envelope.values == pytest.approx(np.exp(-1.5 * envelope.times))

    @pytest.mark.parametrize("kind", ["uniform", "exponential"])
    def test_induction_envelope_decreases(self, kind: str) -> None:
        """Test that the plateau envelope starts at 1 and never increases."""
        envelope = build_envelope(2.0, 1.0, MemoryKernel(kind), horizon=30.0, dt=0.02)

        assert envelope.method == "induction"
        assert envelope.values[0] == 1.0
        assert np.all(np.diff(envelope.values) <= 0.0)
        assert envelope.depth >= 1
        assert envelope.switch_times[0] == 0.0

    @pytest.mark.parametrize("kind", ["dirac", "uniform", "exponential"])
    def test_extremal_is_dominated(self, kind: str) -> None:
        """Test f(t) ≤ a + x(t)(f(0) − a)₊ for the extremal solution."""
        kernel = MemoryKernel(kind)
        f = integrate_extremal(2.0, 1.0, 0.5, kernel, 3.0, horizon=30.0, dt=0.02)
        envelope = build_envelope(2.0, 1.0, kernel, horizon=30.0, dt=0.02)

        report = verify_domination(f, 2.0, 1.0, 0.5, envelope)

        assert report.passed

    def test_grid_mismatch(self) -> None:
        """Test that f and the envelope must share the grid."""
        kernel = MemoryKernel("dirac")
        f = integrate_extremal(2.0, 1.0, 0.0, kernel, 1.0, horizon=5.0, dt=0.1)
        envelope = build_envelope(2.0, 1.0, kernel, horizon=6.0, dt=0.1)

        with pytest.raises(ValueError):
            verify_domination(f, 2.0, 1.0, 0.0, envelope)

    def test_uniform_decay_slope(self) -> None:
        """Test the power-law decay t^{β/α − 1} under the uniform kernel."""
        assert decay_slope(2.0, 1.0) == pytest.approx(-0.5, abs=0.05)


class TestSuite:
    """Test cases for run_suite."""

    def test_small_suite(self) -> None:
        """Test that random draws are all dominated."""
        report = run_suite(3, seed=1, horizon=20.0, dt=0.02)

        assert report.draws == 3
        assert report.pass_rate == 1.0
        assert report.failures == []
        assert report.dirac_closed_form_error < 1e-2
        assert report.uniform_slope == pytest.approx(report.expected_uniform_slope, abs=0.1)

    def test_seed_reproducible(self) -> None:
        """Test that the suite is deterministic for a seed."""
        first = run_suite(2, ("dirac",), seed=4, horizon=5.0, dt=0.05)
        second = run_suite(2, ("dirac",), seed=4, horizon=5.0, dt=0.05)

        assert first.passed == second.passed
        assert first.dirac_closed_form_error == second.dirac_closed_form_error
