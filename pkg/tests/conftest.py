"""Pytest configuration and fixtures for sidlab tests."""

import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from sidlab.config.settings import Settings, load_settings
from sidlab.model import ModelConfig, build_model


@pytest.fixture(autouse=True)
def _restore_package_logger() -> Iterator[None]:
    """Undo CLI logging setup so caplog still sees sidlab records."""
    yield
    package = logging.getLogger("sidlab")
    for handler in package.handlers:
        handler.close()
    package.handlers.clear()
    package.propagate = True
    package.setLevel(logging.NOTSET)


@pytest.fixture
def settings(tmp_path: Path) -> Settings:
    """Default settings writing into a temporary output directory."""
    return load_settings(output_dir=str(tmp_path / "runs"))


@pytest.fixture
def quadratic_settings(tmp_path: Path) -> Settings:
    """Non-interacting overdamped quadratic preset, shortened for unit tests."""
    return load_settings(
        preset="overdamped-quadratic",
        output_dir=str(tmp_path / "runs"),
        overrides=["integrator.horizon=1.0", "integrator.particles=32"],
    )


@pytest.fixture
def interacting_settings(tmp_path: Path) -> Settings:
    """Interacting quadratic preset with a small cloud."""
    return load_settings(
        preset="overdamped-quadratic-interacting",
        output_dir=str(tmp_path / "runs"),
        overrides=["integrator.horizon=1.0", "integrator.particles=64"],
    )


@pytest.fixture
def quadratic_model(quadratic_settings: Settings) -> ModelConfig:
    """Model of V(x) = x² with M = I and no interaction."""
    return build_model(quadratic_settings.model)


@pytest.fixture
def interacting_model(interacting_settings: Settings) -> ModelConfig:
    """Model of V(x) = x² with quadratic repulsion α = 0.45."""
    return build_model(interacting_settings.model)


@pytest.fixture
def kinetic_model(tmp_path: Path) -> ModelConfig:
    """Kinetic Langevin model with V(x) = ½(x − 0.5)² and γ = 2."""
    return build_model(load_settings(preset="kinetic-quadratic", output_dir=str(tmp_path)).model)


@pytest.fixture
def rng() -> np.random.Generator:
    """Deterministic generator for tests that draw their own samples."""
    return np.random.default_rng(12345)
