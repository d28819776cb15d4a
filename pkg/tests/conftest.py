"""Shared model builders for the test suite."""

import random

import pytest

from vacqueue import DistSpec, QueueModel


def mm1_reduction(lam=0.5, mu=1.0):
    """No vacations, no balking, exponential everything: the classical
    single-server queue whose waiting time has a known closed form."""
    return QueueModel(
        arrival=DistSpec.exponential(lam),
        service=DistSpec.exponential(mu),
        patience=DistSpec.point_mass_at_infinity(),
        vacation=DistSpec.deterministic(0.0),
    )


def mm1m_vacations(lam=0.6, mu=1.0, gamma=1.0, nu=2.0):
    """Exponential arrivals/service/patience with exponential vacations."""
    return QueueModel(
        arrival=DistSpec.exponential(lam),
        service=DistSpec.exponential(mu),
        patience=DistSpec.exponential(gamma),
        vacation=DistSpec.exponential(nu),
    )


def calibration_model():
    """Stable reference model used across stability and fixed-point checks."""
    return QueueModel(
        arrival=DistSpec.exponential(1.0),
        service=DistSpec.exponential(2.0),
        patience=DistSpec.exponential(1.0),
        vacation=DistSpec.exponential(5.0),
    )


def heavy_tail_model(lam=0.3):
    """Pareto service, exponential patience, light exponential vacations."""
    return QueueModel(
        arrival=DistSpec.exponential(lam),
        service=DistSpec.pareto(2.5, 1.0),
        patience=DistSpec.exponential(1.0),
        vacation=DistSpec.exponential(5.0),
    )


def random_stable_model(rng: random.Random, allow_infinite_deadline=True) -> QueueModel:
    """A randomized mixed-family model with negative vacation drift and
    modest service load. Continuous laws only (pathwise comparisons between
    simulators must not sit on comparison ties)."""
    e_tau = rng.uniform(1.0, 2.5)
    arrival = rng.choice([
        lambda: DistSpec.exponential(1.0 / e_tau),
        lambda: DistSpec.uniform(0.2 * e_tau, 1.8 * e_tau),
        lambda: DistSpec.weibull(1.5, e_tau / 0.9027),
        lambda: DistSpec.lognormal(__import__("math").log(e_tau) - 0.125, 0.5),
    ])()
    e_sigma = rng.uniform(0.3, 0.8) * e_tau
    service = rng.choice([
        lambda: DistSpec.exponential(1.0 / e_sigma),
        lambda: DistSpec.uniform(0.0, 2.0 * e_sigma),
        lambda: DistSpec.weibull(2.0, e_sigma / 0.8862),
        lambda: DistSpec.pareto(2.5, 0.6 * e_sigma),
    ])()
    choices = [
        lambda: DistSpec.exponential(rng.uniform(0.3, 2.0)),
        lambda: DistSpec.uniform(0.0, rng.uniform(1.0, 4.0)),
        lambda: DistSpec.weibull(1.3, rng.uniform(0.5, 2.0)),
    ]
    if allow_infinite_deadline:
        choices.append(lambda: DistSpec.point_mass_at_infinity())
    patience = rng.choice(choices)()
    e_vac = rng.uniform(0.05, 0.5) * e_tau
    vacation = rng.choice([
        lambda: DistSpec.exponential(1.0 / e_vac),
        lambda: DistSpec.uniform(0.0, 2.0 * e_vac),
        lambda: DistSpec.deterministic(e_vac),
    ])()
    return QueueModel(arrival=arrival, service=service,
                      patience=patience, vacation=vacation)


@pytest.fixture(scope="session")
def model_mm1():
    return mm1_reduction()


@pytest.fixture(scope="session")
def model_mm1m():
    return mm1m_vacations()
