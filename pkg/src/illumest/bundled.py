"""Access to the spectral data bundled with the package.

See data/PROVENANCE.md for what the bundle contains and how it was made.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _data_root() -> Path:
    return Path(resources.files("illumest") / "data")


def bundled_illuminant_manifest() -> Path:
    """Path to the 28-entry illuminant manifest shipped with the package."""
    return _data_root() / "illuminants" / "manifest.txt"


def bundled_camera_paths() -> list[Path]:
    """Paths of the bundled synthetic camera sensitivity CSVs, sorted."""
    return sorted((_data_root() / "cameras").glob("*.csv"))
