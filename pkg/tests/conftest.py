import numpy as np
import pytest

from llmc.drift import build_drift_table
from llmc.measures import DensityPart, LevyMeasure, TargetDensity


def double_well_density(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.1 * x * (x - 4.0) * (x - 6.02) * (x - 10.0))


def non_smooth_density(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x) + ((x > 2.0) & (x < 4.0)) * 1.0


@pytest.fixture(scope="session")
def pi_exp():
    return TargetDensity(evaluate=lambda x: np.exp(-np.asarray(x, dtype=float)))


@pytest.fixture(scope="session")
def mu_exp():
    return LevyMeasure(density=DensityPart(pdf=lambda z: np.exp(-np.asarray(z, dtype=float))))


@pytest.fixture(scope="session")
def pi_dw():
    return TargetDensity(evaluate=double_well_density)


@pytest.fixture(scope="session")
def mu_dw():
    # e^{-z} dz plus atoms of mass 1 at 4 and mass 2 at 8; total mass 4
    return LevyMeasure(
        atoms=((4.0, 1.0), (8.0, 2.0)),
        density=DensityPart(pdf=lambda z: np.exp(-np.asarray(z, dtype=float))),
    )


@pytest.fixture(scope="session")
def pi_ns():
    return TargetDensity(evaluate=non_smooth_density, breakpoints=(2.0, 4.0))


@pytest.fixture(scope="session")
def mu_ns():
    # z^2 e^{-z/2} dz plus a unit atom at 1; total mass 17
    def pdf(z):
        z = np.asarray(z, dtype=float)
        return z * z * np.exp(-0.5 * z)

    return LevyMeasure(atoms=((1.0, 1.0),), density=DensityPart(pdf=pdf))


@pytest.fixture(scope="session")
def field_exp(pi_exp, mu_exp):
    return build_drift_table(pi_exp, mu_exp, 256)


@pytest.fixture(scope="session")
def field_dw(pi_dw, mu_dw):
    return build_drift_table(pi_dw, mu_dw, 512)


@pytest.fixture(scope="session")
def field_ns(pi_ns, mu_ns):
    return build_drift_table(pi_ns, mu_ns, 512)
