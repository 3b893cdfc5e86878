"""Bundled benchmark programs with expected-verdict sidecars."""

from importlib.resources import files
from pathlib import Path


def corpus_dir() -> Path:
    """Filesystem path of the bundled corpus directory."""
    return Path(str(files(__package__)))


def corpus_programs() -> list[Path]:
    return sorted(corpus_dir().glob("*.cp"))
