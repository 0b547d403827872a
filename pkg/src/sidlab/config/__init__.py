"""Configuration package for sidlab."""

from sidlab.config.presets import get_preset, list_presets
from sidlab.config.settings import Settings, get_settings, load_settings

__all__ = ["Settings", "get_preset", "get_settings", "list_presets", "load_settings"]
