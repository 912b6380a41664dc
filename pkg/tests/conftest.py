import numpy as np
import pytest

from nmvm import GIG, Dirac, Gamma, InverseGamma, InverseGaussian, NmvmModel
from nmvm.datasets import gaussian_2020, skew_t_2020


@pytest.fixture(scope="session")
def skew_model():
    return skew_t_2020()


@pytest.fixture(scope="session")
def gauss_model():
    return gaussian_2020()


def random_spd(rng, d, scale=1.0):
    b = rng.normal(size=(d, d))
    return scale * (b @ b.T / d + 0.5 * np.eye(d))


def random_law(rng, kind=None, light_tail=False):
    kind = kind or rng.choice(["dirac", "gamma", "inverse_gamma", "inverse_gaussian", "gig"])
    if kind == "dirac":
        return Dirac(float(rng.uniform(0.5, 2.0)))
    if kind == "gamma":
        return Gamma(float(rng.uniform(0.5, 4.0)), float(rng.uniform(1.0, 6.0)))
    if kind == "inverse_gamma":
        if light_tail:
            return GIG(float(rng.uniform(-3.0, 0.5)), float(rng.uniform(0.5, 3.0)),
                       float(rng.uniform(0.5, 3.0)))
        return InverseGamma(float(rng.uniform(2.5, 6.0)), float(rng.uniform(1.0, 5.0)))
    if kind == "inverse_gaussian":
        return InverseGaussian(float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.5, 3.0)))
    return GIG(float(rng.uniform(-2.0, 2.0)), float(rng.uniform(0.5, 3.0)),
               float(rng.uniform(0.5, 3.0)))


def random_model(rng, d=3, law=None, skew=0.05):
    mu = rng.normal(0.08, 0.05, size=d)
    gamma = rng.normal(0.0, skew, size=d)
    sigma = random_spd(rng, d, 0.04)
    return NmvmModel(mu, gamma, sigma, 0.01, law if law is not None else random_law(rng))


# one PASS/FAIL line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
