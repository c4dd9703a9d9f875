import numpy as np
import pytest

from combscatter import ModelConfig, PumpTone, build_comb, load_config, bundled_config

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def isolator():
    return load_config(bundled_config("isolator"))


@pytest.fixture(scope="session")
def circulator():
    return load_config(bundled_config("circulator"))


def random_config(rng, n_pumps=3, half_width=2, gmax=0.3, gamma=2.0, center=1e4, kinds=None):
    """Random pump set with |g_k| <= gmax on a comb with spacing 1."""
    comb = build_comb(center, 1.0, half_width)
    pumps, used = [], set()
    while len(pumps) < n_pumps:
        kind = kinds[len(pumps)] if kinds else rng.choice(["low", "high"])
        offset = int(rng.integers(1, 2 * half_width + 1)) if kind == "low" \
            else int(rng.integers(-2 * half_width, 2 * half_width + 1))
        if (kind, offset) in used:
            continue
        used.add((kind, offset))
        g = rng.uniform(0.0, gmax)
        pumps.append(PumpTone(kind, offset, g * gamma / center, rng.uniform(-np.pi, np.pi)))
    return ModelConfig(comb, tuple(pumps), coupling_rate=gamma)
