import numpy as np
import pytest

from onebit_doa import ChannelParams, SystemConfig

REF_THETAS = np.array([-40.0, 20.0, 20.005])
REF_ALPHAS = np.array([0.8084 + 0.5887j, 0.6884 + 0.7254j, 0.7344 - 0.6787j])


@pytest.fixture
def ref_params():
    return ChannelParams(REF_THETAS, REF_ALPHAS)


@pytest.fixture
def ref_cfg():
    # SNR 15 dB: noise_var = 3 / 10**1.5
    return SystemConfig(M=90, N_t=1, L=(3,), N_p=16, noise_var=3 / 10**1.5, N=8, seed=2024)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
