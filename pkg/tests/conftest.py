from pathlib import Path

import numpy as np
import pytest

from meltline.metrics import DecisionMatrix

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "meltline" / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def read_table(path):
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


@pytest.fixture(scope="session")
def ref_matrix() -> DecisionMatrix:
    return DecisionMatrix.read_csv(FIXTURES / "reference_matrix.csv")


@pytest.fixture(scope="session")
def ref_scores() -> dict:
    header, rows = read_table(FIXTURES / "reference_scores.csv")
    return {name: np.array([float(r[j]) for r in rows]) for j, name in enumerate(header) if j > 0}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
