"""Test package marker for unittest discovery.

Ensures recursive discovery of tests in this directory and makes ``src/``
importable without installing the package.
"""
from __future__ import annotations

import sys
from pathlib import Path

_SRC_PATH: Path = Path(__file__).resolve().parents[1] / "src"
if str(_SRC_PATH) not in sys.path:
    sys.path.insert(0, str(_SRC_PATH))
