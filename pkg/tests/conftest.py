import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
PUTNAM = ROOT / "src" / "betamachine" / "programs" / "putnam.beta"


@pytest.fixture
def putnam_path():
    return PUTNAM


@pytest.fixture(autouse=True)
def _default_cap(monkeypatch):
    monkeypatch.delenv("BETA_DIM_CAP", raising=False)
