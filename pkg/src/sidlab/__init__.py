"""sidlab - simulation laboratory for self-interacting diffusions.

sidlab simulates diffusions whose drift depends on their own law through a
memory kernel, locates their self-consistent fixed point, runs exit-time
campaigns against Kramers' law and compares them with quasi-potential
predictions.
"""

__version__ = "0.1.0"
__license__ = "MIT"

from sidlab.config.settings import Settings, get_settings, load_settings

__all__ = ["Settings", "get_settings", "load_settings", "__version__"]
