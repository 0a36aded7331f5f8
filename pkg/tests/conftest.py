"""Shared fixtures and independent lattice oracles.

The oracles here deliberately avoid the production quadrature helpers: they
build their own meshes and trapezoid weights so kernel identities are checked
against a second, independently written integration path.
"""
import numpy as np
import pytest

from antiwick import PlanePoint, TorusGeometry, validate_geometry


@pytest.fixture(scope="session")
def geom_n1() -> TorusGeometry:
    a = np.sqrt(2.0 * np.pi)
    return validate_geometry(a, a, 1.0)


@pytest.fixture(scope="session")
def geom_n2() -> TorusGeometry:
    a = np.sqrt(4.0 * np.pi)
    return validate_geometry(a, a, 1.0)


@pytest.fixture(scope="session")
def geom_n3() -> TorusGeometry:
    a = np.sqrt(6.0 * np.pi)
    return validate_geometry(a, a, 1.0)


class LatticeOracle:
    """Brute-force quadrature on a square lattice for plane functions."""

    def __init__(self, span: float, n: int, hbar: float):
        self.hbar = hbar
        axis = np.linspace(-span, span, n)
        self.axis = axis
        self.P, self.Q = np.meshgrid(axis, axis, indexing="ij")
        w = np.full(n, axis[1] - axis[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        self.weights = np.outer(w, w) / (2.0 * np.pi * hbar)

    def sample(self, fn) -> np.ndarray:
        return np.asarray(fn(self.P, self.Q), dtype=complex)

    def overlap(self, f_vals: np.ndarray, g_vals: np.ndarray) -> complex:
        """<f, g> with the conjugate on the first slot."""
        return complex(np.sum(self.weights * np.conj(f_vals) * g_vals))


def gaussian_center(x: PlanePoint, hbar: float):
    """The unit coherent vector at x as a closure: y -> K(y; x)."""

    def fn(P, Q):
        return np.exp(
            -((P - x.p) ** 2 + (Q - x.q) ** 2) / (4.0 * hbar)
            + 1j * (x.p * Q - P * x.q) / (2.0 * hbar)
        )

    return fn


def translate_by_minus(v: PlanePoint, fn, hbar: float):
    """Literal phase-space translation acting as f(y) -> e^{i(...)} f(v + y)."""

    def moved(P, Q):
        return np.exp(1j * (v.p * Q - P * v.q) / (2.0 * hbar)) * fn(P + v.p, Q + v.q)

    return moved


def translate_to(v: PlanePoint, fn, hbar: float):
    """Coherent translation f(y) -> e^{i(...)} f(y - v); maps eta_x to
    (phase) eta_{x+v} and preserves the reproducing subspace."""

    def moved(P, Q):
        return np.exp(1j * (v.p * Q - P * v.q) / (2.0 * hbar)) * fn(P - v.p, Q - v.q)

    return moved
