from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from speechaffect.dataio import AudioBuffer

FIXTURES = Path(__file__).parent / "fixtures"


def tone(freq: float, sr: int = 16000, seconds: float = 1.0, amp: float = 0.5,
         harmonics: int = 1) -> AudioBuffer:
    t = np.arange(int(sr * seconds)) / sr
    x = sum(np.sin(2 * np.pi * k * freq * t) / k for k in range(1, harmonics + 1))
    x = amp * x / np.max(np.abs(x))
    return AudioBuffer(x, sr)


@pytest.fixture
def fad_grid() -> dict:
    return json.loads((FIXTURES / "fad_grid.json").read_text())


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
