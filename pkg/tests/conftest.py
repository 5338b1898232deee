import math

import numpy as np
import pytest
from hypothesis import strategies as st

from wecp.state import QuantumState, Spin, WCoefficients

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    """Store a pass/fail line for the acceptance summary printed at the end of the run."""

    def record(key: str, passed: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS[key] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0].lstrip("AC"))):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_coefficients(seed: int, count: int) -> list[WCoefficients]:
    rng = np.random.default_rng(seed)
    return [WCoefficients.random(rng) for _ in range(count)]


unit_floats = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def coefficient_triples(draw, min_value=0.05):
    values = st.floats(min_value=max(min_value, 1e-3), max_value=1.0)
    if min_value == 0.0:
        values = st.one_of(st.just(0.0), values)
    raw = [draw(values) for _ in range(3)]
    if max(raw) == 0.0:
        raw[0] = 1.0
    return WCoefficients.from_unnormalized(*raw)


@st.composite
def states(draw, modes=("m1", "m2", "m3"), max_electrons=3):
    """Random dense state over 1..max_electrons electrons, one per mode."""
    n = draw(st.integers(min_value=1, max_value=min(max_electrons, len(modes))))
    chosen = modes[:n]
    configs = []
    for bits in range(2**n):
        configs.append(tuple((m, Spin.DOWN if (bits >> i) & 1 else Spin.UP) for i, m in enumerate(chosen)))
    amps = [complex(draw(unit_floats), draw(unit_floats)) for _ in configs]
    norm = math.sqrt(sum(abs(a) ** 2 for a in amps))
    if norm < 1e-3:
        amps = [1.0] + [0.0] * (len(amps) - 1)
        norm = 1.0
    return QuantumState({c: a / norm for c, a in zip(configs, amps)})
