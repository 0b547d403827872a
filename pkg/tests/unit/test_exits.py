"""Tests for exit domains, first-exit detection, the Kramers fit and campaigns."""

import logging

import numpy as np
import pytest

from sidlab.config.settings import CampaignSettings, DomainSettings, IntegratorSettings
from sidlab.errors import DimensionMismatchError, DomainError, InsufficientDataError
from sidlab.exits import (
    Domain,
    ExitCampaignResult,
    ExitDetector,
    ExitTime,
    KramersFit,
    SigmaSamples,
    ball,
    build_domain,
    compare_campaigns,
    default_sigma_grid,
    deterministic_invariance_check,
    first_exit,
    kramers_fit,
    nested_domains,
    path_pairs,
    run_campaign,
)
from sidlab.model import ModelConfig


def _square() -> Domain:
    return Domain(
        kind="halfspaces",
        normals=np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
        offsets=np.ones(4),
    )


def _samples(sigma: float, center: float, count: int = 40) -> SigmaSamples:
    """Log-times symmetric about ``center`` so their mean is exact."""
    offsets = np.tile([-0.1, 0.1], count // 2)
    return SigmaSamples.from_times(sigma, np.exp(center + offsets))


class TestDomain:
    """Test cases for Domain and its helpers."""

    def test_ball_signed_distance(self) -> None:
        """Test that the distance is negative inside and positive outside."""
        domain = ball([0.0], 1.0)

        assert domain.signed_distance([[0.5], [2.0]]) == pytest.approx([-0.5, 1.0])
        assert domain.contains([[0.5], [1.0]]).tolist() == [True, False]

    def test_product_ignores_momentum(self) -> None:
        """Test that a product domain constrains positions only."""
        domain = Domain(kind="product", center=np.array([0.0]), radius=1.0)

        assert domain.signed_distance([0.5, 100.0]) == pytest.approx(-0.5)

    def test_ball_dimension_checked(self) -> None:
        """Test that a ball refuses states of another dimension."""
        with pytest.raises(DimensionMismatchError):
            ball([0.0], 1.0).signed_distance([0.0, 0.0])

    def test_halfspaces(self) -> None:
        """Test the square |x| < 1, |y| < 1."""
        domain = _square()

        assert domain.signed_distance([0.5, 0.0]) == pytest.approx(-0.5)
        assert domain.signed_distance([1.5, 0.2]) == pytest.approx(0.5)
        center, radius = domain.chebyshev_ball()
        assert radius == pytest.approx(1.0)
        assert center == pytest.approx([0.0, 0.0], abs=1e-9)

    def test_normals_are_normalized(self) -> None:
        """Test that a scaled half-space describes the same set."""
        domain = Domain(kind="halfspaces", normals=np.array([[2.0]]), offsets=np.array([2.0]))

        assert domain.offsets == pytest.approx([1.0])
        assert domain.signed_distance([0.25]) == pytest.approx(-0.75)

    def test_inflation(self) -> None:
        """Test that inflation grows balls and polytopes alike."""
        assert ball([0.0], 1.0).inflated(0.2).inradius() == pytest.approx(1.2)
        assert _square().inflated(-0.25).inradius() == pytest.approx(0.75)

    def test_nested_domains(self) -> None:
        """Test D shrunk and grown by ξ."""
        inner, outer = nested_domains(ball([0.0], 1.0), 0.3)

        assert inner.effective_radius == pytest.approx(0.7)
        assert outer.effective_radius == pytest.approx(1.3)

    @pytest.mark.parametrize("xi", [-0.1, 1.0, 2.0])
    def test_nested_domains_range(self, xi: float) -> None:
        """Test that ξ must lie in [0, inradius)."""
        with pytest.raises(DomainError):
            nested_domains(ball([0.0], 1.0), xi)

    def test_build_domain_defaults_to_lambda(self) -> None:
        """Test that the center defaults to λ, its position block for products."""
        domain = build_domain(DomainSettings(kind="product", radius=0.5), [0.5, 0.0])

        assert domain.kind == "product"
        assert domain.center == pytest.approx([0.5])

    def test_build_domain_halfspaces_need_faces(self) -> None:
        """Test that polytopes without faces are refused."""
        with pytest.raises(DomainError):
            build_domain(DomainSettings(kind="halfspaces"), [0.0])


class TestDetection:
    """Test cases for ExitDetector and first_exit."""

    def test_interpolated_crossing(self) -> None:
        """Test that the crossing is placed where the signed distance vanishes."""
        path = path_pairs([0.0, 1.0, 2.0], [[0.0], [0.5], [1.5]])

        assert first_exit(path, ball([0.0], 1.0)) == ExitTime(time=1.5, censored=False)

    def test_censored_path(self) -> None:
        """Test that a path staying inside is censored at its last time."""
        path = path_pairs([0.0, 1.0, 2.0], [[0.0], [0.5], [0.2]])

        assert first_exit(path, ball([0.0], 1.0)) == ExitTime(time=2.0, censored=True)

    def test_start_outside(self) -> None:
        """Test that a path starting outside is refused."""
        with pytest.raises(DomainError):
            first_exit(path_pairs([0.0, 1.0], [[3.0], [0.0]]), ball([0.0], 1.0))

    def test_first_crossing_is_kept(self) -> None:
        """Test per-particle exits with later re-entry ignored."""
        detector = ExitDetector(ball([0.0], 1.0), [[0.0], [0.0]])

        fresh = detector.update(1.0, [[2.0], [0.5]])
        detector.update(2.0, [[0.0], [0.5]])

        assert fresh.tolist() == [True, False]
        assert detector.results(horizon=5.0) == [
            ExitTime(time=0.5, censored=False),
            ExitTime(time=5.0, censored=True),
        ]
        assert not detector.all_exited


class TestKramersFit:
    """Test cases for SigmaSamples and kramers_fit."""

    def test_sigma_samples(self) -> None:
        """Test the censoring bookkeeping of one noise level."""
        samples = SigmaSamples(0.5, np.array([1.0, np.e, 10.0]), np.array([False, False, True]), horizon=10.0)

        assert samples.count == 3
        assert samples.censored_fraction == pytest.approx(1 / 3)
        assert samples.mean_log == pytest.approx(0.5)
        assert samples.summary()["horizon"] == 10.0

    def test_exact_regression(self) -> None:
        """Test that exact Arrhenius data give back H and the intercept."""
        samples = [_samples(s, 1.0 + 0.6 / s**2) for s in (0.4, 0.5, 0.6, 0.7)]

        fit = kramers_fit(samples)

        assert fit.exponent == pytest.approx(0.3, rel=1e-9)
        assert fit.intercept == pytest.approx(1.0, rel=1e-9)
        assert fit.exponent_ci[0] <= 0.3 <= fit.exponent_ci[1]
        assert fit.flagged == []

    def test_prefactor_power(self) -> None:
        """Test that q·log σ² is removed before the regression."""
        samples = [_samples(s, 0.6 / s**2 + 0.5 * np.log(s**2)) for s in (0.4, 0.5, 0.6)]

        fit = kramers_fit(samples, prefactor_power=0.5)

        assert fit.exponent == pytest.approx(0.3, rel=1e-9)
        assert fit.intercept == pytest.approx(0.0, abs=1e-9)

    def test_heavily_censored_point_flagged(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test that a σ point with too many censored runs is left out."""
        samples = [_samples(s, 0.6 / s**2) for s in (0.5, 0.6, 0.7)]
        times = np.full(40, 100.0)
        censored = np.arange(40) < 30
        samples.append(SigmaSamples(0.4, times, censored, horizon=100.0))

        with caplog.at_level(logging.WARNING, logger="sidlab.exits"):
            fit = kramers_fit(samples)

        assert fit.flagged == [0.4]
        assert fit.used == [0.5, 0.6, 0.7]
        assert "censored" in caplog.text

    def test_too_few_points(self) -> None:
        """Test that two σ points are not enough."""
        with pytest.raises(InsufficientDataError):
            kramers_fit([_samples(0.5, 1.0), _samples(0.6, 2.0)])

    def test_dict_round_trip(self) -> None:
        """Test that a fit survives to_dict and from_dict."""
        fit = kramers_fit([_samples(s, 0.6 / s**2) for s in (0.4, 0.5, 0.6)])

        restored = KramersFit.from_dict(fit.to_dict())

        assert restored.slope == fit.slope
        assert restored.slope_ci == fit.slope_ci
        assert restored.used == fit.used


class TestCampaign:
    """Test cases for campaign helpers and run_campaign."""

    def test_default_sigma_grid(self) -> None:
        """Test that 1/σ² spans [1.2/H, 4/H] evenly."""
        sigmas = default_sigma_grid(0.5, points=4)

        assert 1 / np.square(sigmas) == pytest.approx(np.linspace(2.4, 8.0, 4))

    def test_compare_campaigns(self) -> None:
        """Test the one-sided rank test at shared σ values."""
        early = ExitCampaignResult(
            samples=[SigmaSamples.from_times(0.5, np.linspace(1.0, 2.0, 30)), _samples(0.7, 1.0)],
            fit=None,
            seed=0,
            model_hash="a",
            lam=np.zeros(1),
        )
        late = ExitCampaignResult(
            samples=[SigmaSamples.from_times(0.5, np.linspace(5.0, 6.0, 30))],
            fit=None,
            seed=0,
            model_hash="b",
            lam=np.zeros(1),
        )

        comparison = compare_campaigns(early, late)

        assert comparison.sigmas == [0.5]
        assert comparison.all_below(0.01)
        assert comparison.exponent_separated is None

    def test_rest_point_outside(self, quadratic_model: ModelConfig) -> None:
        """Test that λ must lie in the domain."""
        with pytest.raises(DomainError):
            run_campaign(
                quadratic_model,
                ball([3.0], 0.5),
                CampaignSettings(sigmas=[0.5, 0.6, 0.7]),
                IntegratorSettings(),
                lam=[0.0],
            )

    def test_short_sigma_grid(self, quadratic_model: ModelConfig) -> None:
        """Test that fewer than three σ values are refused."""
        with pytest.raises(InsufficientDataError):
            run_campaign(
                quadratic_model,
                ball([0.0], 0.5),
                CampaignSettings(sigmas=[0.5, 0.6]),
                IntegratorSettings(),
                lam=[0.0],
            )

    def test_small_campaign(self, quadratic_model: ModelConfig) -> None:
        """Test the layout of a short campaign and its seed reproducibility."""
        settings = CampaignSettings(sigmas=[0.5, 0.6, 0.7], replicas=3, dt=0.01, horizon=0.5, particles=1)

        first = run_campaign(quadratic_model, ball([0.0], 0.5), settings, IntegratorSettings(), seed=9)
        second = run_campaign(quadratic_model, ball([0.0], 0.5), settings, IntegratorSettings(), seed=9)

        assert first.sigmas == [0.5, 0.6, 0.7]
        assert all(s.count == 3 and s.dt == 0.01 for s in first.samples)
        assert all(np.all(s.times <= 0.5 + 1e-9) for s in first.samples)
        assert first.predicted_h == pytest.approx(0.25, rel=1e-6)
        assert first.header()["mode"] == "tagged"
        for a, b in zip(first.samples, second.samples):
            assert np.array_equal(a.times, b.times)

    def test_worker_count_independent(self, interacting_model: ModelConfig) -> None:
        """Test that 1, 4 and 16 workers give identical exit times and fits."""
        settings = CampaignSettings(
            sigmas=[0.5, 0.6, 0.7], replicas=6, dt=0.01, horizon=2.0, particles=4, min_replicas=3, censor_limit=1.0
        )
        domain = ball([0.0], 0.3)

        results = [
            run_campaign(
                interacting_model, domain, settings, IntegratorSettings(), seed=5, workers=workers, lam=[0.0]
            )
            for workers in (1, 4, 16)
        ]

        serial = results[0]
        assert serial.fit is not None
        for parallel in results[1:]:
            assert parallel.sigmas == serial.sigmas
            for a, b in zip(serial.samples, parallel.samples):
                assert np.array_equal(a.times, b.times)
                assert np.array_equal(a.censored, b.censored)
            assert parallel.fit == serial.fit

    def test_invariance_check(self, interacting_model: ModelConfig) -> None:
        """Test the zero-noise confinement report."""
        inside = deterministic_invariance_check(interacting_model, ball([0.0], 1.0), horizon=1.0)
        outside = deterministic_invariance_check(interacting_model, ball([3.0], 0.5), horizon=1.0)

        assert inside.stays_inside
        assert inside.max_signed_distance == pytest.approx(-1.0)
        assert not outside.stays_inside
