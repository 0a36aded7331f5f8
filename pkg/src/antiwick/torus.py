"""Induced quantization on the phase-space torus.

The torus Hilbert space is carved out of the plane by summing twisted grid
translations of the plane kernel.  Conventions used throughout:

  * kernel row = primed point; conjugation sits on the primed argument;
  * the grid-sum summand is  twist_phase(g, k) * translation_phase(g, x)
    * K(x'; x + g),  where translation_phase is the coherent-translation
    cocycle (the conjugate of the composition cocycle weyl_phase).  This is
    the orientation under which the grid sum, the theta-basis expansion and
    the path-integral phase weights all describe the same kernel; the
    alternative orientation is not Hermitian.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureBudgetExceeded
from .geometry import (
    CharacterK,
    FourierSymbol,
    GridVector,
    PlanePoint,
    TorusGeometry,
    grid_vectors_within,
)
from .plane import kernel_grid, weyl_phase

THETA_TAIL_TOL = 1e-14


def twist_phase(g: GridVector, k: CharacterK, hbar: float) -> complex:
    """Character-and-half-area phase attached to the grid translation g."""
    arg = g.g1 * k.k2 - g.g2 * k.k1 + 0.5 * g.g1 * g.g2
    return complex(np.exp(1j * arg / hbar))


def check_group_law(
    geom: TorusGeometry,
    k: CharacterK,
    g: GridVector,
    g_prime: GridVector,
    tol: float = 1e-12,
) -> bool:
    """True when twisted translations compose as a genuine representation.

    Verifies twist(g) twist(g') weyl_phase(g, g') == twist(g + g'), which
    holds exactly when a*b is an integer number of Planck cells.
    """
    lhs = (
        twist_phase(g, k, geom.hbar)
        * twist_phase(g_prime, k, geom.hbar)
        * weyl_phase(
            PlanePoint(g.g1, g.g2), PlanePoint(g_prime.g1, g_prime.g2), geom.hbar
        )
    )
    total = GridVector(g.m + g_prime.m, g.n + g_prime.n, g.g1 + g_prime.g1, g.g2 + g_prime.g2)
    rhs = twist_phase(total, k, geom.hbar)
    return abs(lhs - rhs) <= tol


def _grid_for_separation(geom: TorusGeometry, sep: float, tol: float) -> list[GridVector]:
    # Omitted summands are bounded by exp(-(|g| - sep)^2 / 4 hbar); one extra
    # shell of margin keeps the truncation certificate honest.
    reach = sep + 2.0 * math.sqrt(geom.hbar * math.log(1.0 / tol)) + max(geom.a, geom.b)
    return grid_vectors_within(geom, reach)


def torus_kernel_grid(pp, qp, p, q, geom: TorusGeometry, k: CharacterK, tol: float = 1e-12):
    """Vectorized torus reproducing kernel K_k(x'; x); arguments broadcast."""
    pp, qp, p, q = np.broadcast_arrays(
        np.asarray(pp, float), np.asarray(qp, float),
        np.asarray(p, float), np.asarray(q, float),
    )
    sep = float(np.max(np.hypot(pp - p, qp - q))) if pp.size else 0.0
    total = np.zeros(pp.shape, dtype=np.complex128)
    h = geom.hbar
    for g in _grid_for_separation(geom, sep, tol):
        phase = twist_phase(g, k, h) * np.exp(1j * (g.g1 * q - g.g2 * p) / (2.0 * h))
        total += phase * kernel_grid(pp, qp, p + g.g1, q + g.g2, h)
    return total


def torus_kernel(
    x_prime: PlanePoint, x: PlanePoint, geom: TorusGeometry, k: CharacterK,
    tol: float = 1e-12,
) -> complex:
    """Torus reproducing kernel at a single pair of points."""
    return complex(torus_kernel_grid(x_prime.p, x_prime.q, x.p, x.q, geom, k, tol))


def _theta_window(geom: TorusGeometry, tail_tol: float) -> int:
    # Gaussian theta terms decay like exp(-(distance)^2 / 2 hbar); the window
    # is centered per evaluation point, so it only needs to cover the decay
    # length relative to the largest retained term (worst case b/2 off-center).
    b, h = geom.b, geom.hbar
    need = math.sqrt(2.0 * h * math.log(1.0 / tail_tol) + b * b / 4.0) + b / 2.0
    return int(math.ceil(need / b)) + 1


@dataclass(frozen=True)
class ThetaBasis:
    """The N explicit quasi-periodic Gaussian-sum functions spanning the
    torus Hilbert space for a given character.

    `window` is the half-width of the theta-sum truncation; terms beyond it
    are below THETA_TAIL_TOL of the largest retained term for any argument.
    """

    geometry: TorusGeometry
    character: CharacterK
    window: int

    @classmethod
    def build(
        cls, geom: TorusGeometry, k: CharacterK, tail_tol: float = THETA_TAIL_TOL
    ) -> "ThetaBasis":
        return cls(geometry=geom, character=k, window=_theta_window(geom, tail_tol))

    @property
    def dim(self) -> int:
        return self.geometry.level_N

    def values_grid(self, j: int, p, q):
        """Evaluate member j on broadcasting arrays of plane coordinates."""
        if not 0 <= j < self.dim:
            raise IndexError(f"basis index {j} outside [0, {self.dim})")
        geom, k = self.geometry, self.character
        a, b, h, N = geom.a, geom.b, geom.hbar, geom.level_N
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        offset = k.k2 + b * j / N
        u = q + offset
        n0 = np.round(u / b)
        ns = n0[..., None] + np.arange(-self.window, self.window + 1, dtype=float)
        theta = np.sum(
            np.exp(
                1j * b * ns * (p[..., None] + k.k1) / h
                - (u[..., None] - b * ns) ** 2 / (2.0 * h)
            ),
            axis=-1,
        )
        pref = (4.0 * math.pi * h / (a * a)) ** 0.25
        return pref * np.exp(-1j * p * q / (2.0 * h) - 1j * p * offset / h) * theta

    def value(self, j: int, x: PlanePoint) -> complex:
        return complex(self.values_grid(j, x.p, x.q))

    def stack(self, p, q) -> np.ndarray:
        """All members evaluated at once; shape (N,) + broadcast shape."""
        return np.stack([self.values_grid(j, p, q) for j in range(self.dim)])


@dataclass(frozen=True, eq=False)
class KernelEigenBasis:
    """Fallback basis obtained by diagonalizing the kernel integral operator.

    Used when the closed-form basis fails its Gram check against the grid-sum
    kernel (which is the authoritative definition of the space).  Members are
    extended off the quadrature grid by the kernel itself, so they live in
    the reproducing subspace by construction.
    """

    geometry: TorusGeometry
    character: CharacterK
    grid_p: np.ndarray
    grid_q: np.ndarray
    weight: float
    vectors: np.ndarray      # (N, n_grid) eigenvectors, weight-orthonormal
    eigenvalues: np.ndarray  # (N,)

    @classmethod
    def build(
        cls, geom: TorusGeometry, k: CharacterK, quad_points: int = 32,
        kernel_tol: float = 1e-12,
    ) -> "KernelEigenBasis":
        n = quad_points
        ps = (np.arange(n) + 0.5) * geom.a / n
        qs = (np.arange(n) + 0.5) * geom.b / n
        P, Q = np.meshgrid(ps, qs, indexing="ij")
        gp, gq = P.ravel(), Q.ravel()
        w = (geom.a / n) * (geom.b / n) / (2.0 * math.pi * geom.hbar)
        K = torus_kernel_grid(gp[:, None], gq[:, None], gp[None, :], gq[None, :],
                              geom, k, kernel_tol)
        K = 0.5 * (K + K.conj().T)
        evals, evecs = np.linalg.eigh(K * w)
        order = np.argsort(evals)[::-1][: geom.level_N]
        lam = evals[order]
        vec = evecs[:, order].T / math.sqrt(w)
        # fix the arbitrary eigenvector phases deterministically
        for i in range(vec.shape[0]):
            jmax = int(np.argmax(np.abs(vec[i])))
            ph = vec[i, jmax]
            vec[i] *= np.conj(ph) / abs(ph)
        return cls(geom, k, gp, gq, w, vec, lam)

    @property
    def dim(self) -> int:
        return self.geometry.level_N

    def values_grid(self, j: int, p, q):
        if not 0 <= j < self.dim:
            raise IndexError(f"basis index {j} outside [0, {self.dim})")
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        K = torus_kernel_grid(
            p[..., None], q[..., None],
            self.grid_p, self.grid_q, self.geometry, self.character,
        )
        return (K @ (self.vectors[j] * self.weight)) / self.eigenvalues[j]

    def value(self, j: int, x: PlanePoint) -> complex:
        return complex(self.values_grid(j, x.p, x.q))

    def stack(self, p, q) -> np.ndarray:
        return np.stack([self.values_grid(j, p, q) for j in range(self.dim)])


@dataclass(frozen=True)
class QuadratureSpec:
    """Midpoint tensor rule over the torus cell used for matrix elements."""

    points_per_axis: int = 64
    gram_tol: float = 1e-8

    def grid(self, geom: TorusGeometry) -> tuple[np.ndarray, np.ndarray, float]:
        n = self.points_per_axis
        ps = (np.arange(n) + 0.5) * geom.a / n
        qs = (np.arange(n) + 0.5) * geom.b / n
        P, Q = np.meshgrid(ps, qs, indexing="ij")
        w = (geom.a / n) * (geom.b / n) / (2.0 * math.pi * geom.hbar)
        return P, Q, w


def gram_matrix(basis, quad: QuadratureSpec) -> np.ndarray:
    """<phi_i, phi_j> over the torus cell; identity for a healthy basis."""
    P, Q, w = quad.grid(basis.geometry)
    Phi = basis.stack(P, Q).reshape(basis.dim, -1)
    return (np.conj(Phi) * w) @ Phi.T


def build_basis(
    geom: TorusGeometry,
    k: CharacterK,
    quad: QuadratureSpec | None = None,
    tail_tol: float = THETA_TAIL_TOL,
    force_fallback: bool = False,
):
    """Closed-form basis checked against its Gram matrix, with the kernel
    diagonalization as fallback when the check fails."""
    quad = quad or QuadratureSpec()
    if not force_fallback:
        basis = ThetaBasis.build(geom, k, tail_tol)
        gram = gram_matrix(basis, quad)
        if np.abs(gram - np.eye(basis.dim)).max() <= quad.gram_tol:
            return basis
    return KernelEigenBasis.build(geom, k, quad_points=max(32, quad.points_per_axis // 2))


def toeplitz_matrix(h: FourierSymbol, basis, quad: QuadratureSpec) -> np.ndarray:
    """Matrix of multiply-by-h compressed to the torus Hilbert space.

    entries[i, j] = <phi_i, h phi_j> by the declared quadrature.  Raises
    QuadratureBudgetExceeded when the same quadrature cannot reproduce the
    Gram identity, which signals an under-resolved basis rather than a
    property of h.
    """
    P, Q, w = quad.grid(basis.geometry)
    Phi = basis.stack(P, Q).reshape(basis.dim, -1)
    gram = (np.conj(Phi) * w) @ Phi.T
    resid = float(np.abs(gram - np.eye(basis.dim)).max())
    if resid > quad.gram_tol:
        raise QuadratureBudgetExceeded(
            f"Gram residual {resid:.3e} exceeds tolerance {quad.gram_tol:.3e} "
            f"at {quad.points_per_axis} points per axis"
        )
    hvals = h.evaluate(P, Q).ravel()
    H = (np.conj(Phi) * (hvals * w)) @ Phi.T
    return 0.5 * (H + H.conj().T)


def propagator_matrix(H: np.ndarray, t: float, hbar: float) -> np.ndarray:
    """U = exp(-i t H / hbar) by unitary diagonalization of (H + H^dag)/2."""
    Hs = 0.5 * (H + H.conj().T)
    evals, V = np.linalg.eigh(Hs)
    U = (V * np.exp(-1j * t * evals / hbar)) @ V.conj().T
    defect = np.abs(U @ U.conj().T - np.eye(U.shape[0])).max()
    if defect > 1e-10:
        raise ValueError(f"propagator lost unitarity: defect {defect:.3e}")
    return U


def propagator_kernel_grid(pp, qp, p, q, U: np.ndarray, basis):
    """Continuous kernel of the propagator through the basis expansion."""
    rows = basis.stack(pp, qp)
    cols = basis.stack(p, q)
    out = np.zeros(np.broadcast_shapes(rows.shape[1:], cols.shape[1:]), dtype=complex)
    for i in range(basis.dim):
        for j in range(basis.dim):
            out = out + np.conj(rows[i]) * U[i, j] * cols[j]
    return out


def propagator_kernel(x_prime: PlanePoint, x: PlanePoint, U: np.ndarray, basis) -> complex:
    return complex(propagator_kernel_grid(x_prime.p, x_prime.q, x.p, x.q, U, basis))


def propagator_series(
    x_prime: PlanePoint, x: PlanePoint, H: np.ndarray, basis, t: float,
    n_max: int,
) -> complex:
    """Truncated exponential series for the propagator kernel.

    sum_{n<=n_max} (-it)^n / (hbar^n n!) <phi(x'), H^n phi(x)>; independent
    of the diagonalization route, so it serves as its small-time oracle.
    """
    hbar = basis.geometry.hbar
    row = np.array([basis.value(i, x_prime) for i in range(basis.dim)])
    vec = np.array([basis.value(j, x) for j in range(basis.dim)])
    total = 0.0 + 0.0j
    coeff = 1.0 + 0.0j
    for n in range(n_max + 1):
        if n > 0:
            vec = H @ vec
            coeff *= (-1j * t / hbar) / n
        total += coeff * np.vdot(row, vec)
    return complex(total)


def symmetrize(psi, geom: TorusGeometry, k: CharacterK, tol: float = 1e-12,
               support_radius: float | None = None):
    """Project a decaying plane function onto the twisted-periodic subspace.

    `psi` maps broadcasting coordinate arrays (p, q) to values and must decay
    like a Gaussian so the grid sum converges; `support_radius` bounds the
    region where it is non-negligible (defaults to one cell diagonal plus the
    coherent decay length).  Returns a callable with the same signature.

    The image satisfies f(y - g) = conj(twist-and-cocycle phase) * f(y): the
    twisted quasi-periodicity that characterizes the torus space.
    """
    h = geom.hbar
    if support_radius is None:
        support_radius = math.hypot(geom.a, geom.b) + 8.0 * math.sqrt(h)
    gs = _grid_for_separation(geom, support_radius, tol)

    def symmetrized(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        total = np.zeros(np.broadcast_shapes(p.shape, q.shape), dtype=complex)
        for g in gs:
            phase = twist_phase(g, k, h) * np.exp(1j * (g.g1 * q - p * g.g2) / (2.0 * h))
            total = total + phase * np.asarray(psi(p - g.g1, q - g.g2))
        return total

    return symmetrized
