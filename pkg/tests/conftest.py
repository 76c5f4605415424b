"""Shared fixtures and independent closed-form oracles."""

import numpy as np
import pytest

from tspec import Potential


def const_jost(c: float, k: complex):
    """Closed-form Jost data for the constant potential q = c.

    Solves psi'' = (c - k^2) psi from psi(1)=e^{ik}, psi'(1)=ik e^{ik} by
    hand: f(k,x) = e^{ik} [cos(kp (x-1)) + (ik/kp) sin(kp (x-1))], kp^2 = k^2 - c.
    """
    k = complex(k)
    kp = np.sqrt(k * k - c)
    e = np.exp(1j * k)
    if kp == 0:
        return e * (1.0 - 1j * k), e * (1j * k)
    f = e * (np.cos(kp) - (1j * k / kp) * np.sin(kp))
    fp = e * (kp * np.sin(kp) + 1j * k * np.cos(kp))
    return f, fp


def dirichlet_d_const1(k):
    """Closed-form Dirichlet characteristic function for q = 1.

    D(k) = (sin k / k) cos kp - cos k sin kp / kp with kp = sqrt(k^2 - 1);
    obtained by substituting the constant-potential Jost solution into
    [f(k,0) - f(-k,0)] / (2ik). Not valid at k = 0 or k = +-1 (removable).
    """
    k = np.asarray(k, dtype=complex)
    kp = np.sqrt(k * k - 1.0)
    return (np.sin(k) / k) * np.cos(kp) - np.cos(k) * np.sin(kp) / kp


@pytest.fixture(scope="session")
def q_one():
    return Potential.constant(1.0)


@pytest.fixture(scope="session")
def q_zero():
    return Potential.constant(0.0)


@pytest.fixture(scope="session")
def q_linear():
    """q(x) = x."""
    return Potential.polynomial([0.0, 1.0])


@pytest.fixture(scope="session")
def q_xm1():
    """q(x) = x - 1 (vanishes at the right endpoint, q'(1)=1)."""
    return Potential.polynomial([-1.0, 1.0])


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def kg_one_128(q_one):
    from tspec import kernel_iterate

    return kernel_iterate(q_one, 128)


@pytest.fixture(scope="session")
def kg_one_256(q_one):
    from tspec import kernel_iterate

    return kernel_iterate(q_one, 256)
