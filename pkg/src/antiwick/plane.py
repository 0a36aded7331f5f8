"""Coherent-state machinery on the planar phase space.

The Hilbert space is the reproducing-kernel subspace of L^2(R^2, dp dq/2pihbar)
cut out by the Gaussian kernel below; quantization multiplies by a classical
symbol and projects back.  Plane functions are discretized on uniform
rectangular lattices and all integrals use the trapezoid rule, which is
spectrally accurate for the Gaussian-decaying integrands handled here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LatticeTooCoarse
from .geometry import FourierSymbol, PlanePoint

# Lattice defaults: tails are placed where the kernel Gaussian times a state
# of comparable decay is below ~1e-14 (8 sigma per factor), and the spacing
# resolves both the Gaussian width and the fastest kernel phase on the span.
DEFAULT_TAIL_SIGMAS = 8.0
DEFAULT_POINTS_PER_SIGMA = 4.0


def plane_kernel(x_prime: PlanePoint, x: PlanePoint, hbar: float) -> complex:
    """Reproducing kernel K(x'; x); Hermitian, K(x; x) = 1, |K| <= 1."""
    return complex(
        kernel_grid(x_prime.p, x_prime.q, x.p, x.q, hbar)
    )


def kernel_grid(pp, qp, p, q, hbar: float):
    """Vectorized kernel: exp(-(|x'-x|^2)/4hbar + i(p q' - p' q)/2hbar).

    Arguments broadcast; the primed pair indexes the output row convention
    used throughout (conjugation always sits on the primed slot).
    """
    pp = np.asarray(pp, dtype=float)
    qp = np.asarray(qp, dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    expo = (
        -((pp - p) ** 2 + (qp - q) ** 2) / (4.0 * hbar)
        + 1j * (p * qp - pp * q) / (2.0 * hbar)
    )
    return np.exp(expo)


def coherent_overlap(x_prime: PlanePoint, x: PlanePoint, hbar: float) -> complex:
    """Overlap of unit coherent vectors centered at x' and x.

    Identical to the reproducing kernel; kept as its own entry point because
    grid sums on the torus are built from these overlaps.
    """
    return plane_kernel(x_prime, x, hbar)


def weyl_phase(g: PlanePoint, x: PlanePoint, hbar: float) -> complex:
    """Composition cocycle of the phase-space translation ray representation.

    D(g) D(x) = weyl_phase(g, x) * D(g + x), with
    weyl_phase = exp(i (g_q p - g_p q) / 2 hbar).
    """
    return complex(np.exp(1j * (g.q * x.p - g.p * x.q) / (2.0 * hbar)))


def translation_phase(g: PlanePoint, x: PlanePoint, hbar: float) -> complex:
    """Phase a coherent vector at x acquires when translated by g.

    The translation that maps eta_x onto eta_{x+g} carries the opposite
    cocycle orientation to :func:`weyl_phase`: this equals its conjugate.
    """
    return complex(np.exp(1j * (g.p * x.q - g.q * x.p) / (2.0 * hbar)))


@dataclass(frozen=True)
class PlaneLattice:
    """Uniform rectangular sampling lattice, center +/- half-width per axis."""

    center_p: float
    center_q: float
    half_p: float
    half_q: float
    n_p: int
    n_q: int

    def __post_init__(self):
        if self.half_p <= 0 or self.half_q <= 0:
            raise ValueError("lattice half-widths must be positive")
        if self.n_p < 2 or self.n_q < 2:
            raise ValueError("lattice needs at least 2 points per axis")

    @property
    def p_axis(self) -> np.ndarray:
        return np.linspace(self.center_p - self.half_p, self.center_p + self.half_p, self.n_p)

    @property
    def q_axis(self) -> np.ndarray:
        return np.linspace(self.center_q - self.half_q, self.center_q + self.half_q, self.n_q)

    @property
    def dp(self) -> float:
        return 2.0 * self.half_p / (self.n_p - 1)

    @property
    def dq(self) -> float:
        return 2.0 * self.half_q / (self.n_q - 1)

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.p_axis, self.q_axis, indexing="ij")

    def trapezoid_weights(self) -> tuple[np.ndarray, np.ndarray]:
        wp_ = np.full(self.n_p, self.dp)
        wp_[0] = wp_[-1] = 0.5 * self.dp
        wq_ = np.full(self.n_q, self.dq)
        wq_[0] = wq_[-1] = 0.5 * self.dq
        return wp_, wq_


def gaussian_lattice(
    span: float,
    hbar: float,
    center: PlanePoint = PlanePoint(0.0, 0.0),
    tail_sigmas: float = DEFAULT_TAIL_SIGMAS,
    points_per_axis: int | None = None,
) -> PlaneLattice:
    """Lattice covering states supported within `span` of `center`.

    Half-width is span + tail_sigmas*sqrt(hbar); the default point count
    keeps the spacing near sqrt(hbar)/DEFAULT_POINTS_PER_SIGMA.
    """
    half = span + tail_sigmas * math.sqrt(hbar)
    if points_per_axis is None:
        points_per_axis = int(math.ceil(2.0 * half * DEFAULT_POINTS_PER_SIGMA / math.sqrt(hbar))) + 1
    return PlaneLattice(center.p, center.q, half, half, points_per_axis, points_per_axis)


@dataclass(frozen=True, eq=False)
class SampledState:
    """A plane function sampled on a PlaneLattice."""

    lattice: PlaneLattice
    values: np.ndarray

    def __post_init__(self):
        expect = (self.lattice.n_p, self.lattice.n_q)
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != lattice {expect}")

    @classmethod
    def from_function(cls, lattice: PlaneLattice, fn) -> "SampledState":
        P, Q = lattice.meshes()
        return cls(lattice, np.asarray(fn(P, Q), dtype=np.complex128))

    def norm(self, hbar: float) -> float:
        wp_, wq_ = self.lattice.trapezoid_weights()
        w = np.outer(wp_, wq_) / (2.0 * math.pi * hbar)
        return float(np.sqrt(np.sum(w * np.abs(self.values) ** 2).real))


def coherent_state(lattice: PlaneLattice, center: PlanePoint, hbar: float) -> SampledState:
    """eta_x sampled on the lattice: the function y -> K(y; x)."""
    P, Q = lattice.meshes()
    return SampledState(lattice, kernel_grid(P, Q, center.p, center.q, hbar))


def inner_product(phi: SampledState, psi: SampledState, hbar: float) -> complex:
    """<phi, psi> = integral conj(phi) psi dp dq / 2 pi hbar (trapezoid)."""
    if phi.lattice != psi.lattice:
        raise ValueError("states live on different lattices")
    wp_, wq_ = phi.lattice.trapezoid_weights()
    w = np.outer(wp_, wq_) / (2.0 * math.pi * hbar)
    return complex(np.sum(w * np.conj(phi.values) * psi.values))


def quadrature_error_estimate(psi: SampledState, hbar: float) -> float:
    """Bound-flavored estimate of the projection quadrature error.

    Two failure modes: Gaussian tails of the state leaking past the lattice
    boundary (the kernel contributes unit mass, so the boundary maximum is
    the scale), and aliasing of the kernel phase, which oscillates at
    frequency max|coordinate|/2hbar across the source lattice.
    """
    vals = np.abs(psi.values)
    boundary = max(
        float(vals[0, :].max()), float(vals[-1, :].max()),
        float(vals[:, 0].max()), float(vals[:, -1].max()),
    )
    sup = float(vals.max())
    lat = psi.lattice
    omega = max(
        abs(lat.center_p) + lat.half_p, abs(lat.center_q) + lat.half_q
    ) / (2.0 * hbar)
    spacing = max(lat.dp, lat.dq)
    headroom = math.pi / spacing - omega
    alias = 1.0 if headroom <= 0 else math.exp(-(headroom ** 2) * hbar)
    return 2.0 * boundary + sup * alias


def project(psi: SampledState, hbar: float, tol: float | None = None) -> SampledState:
    """Apply the reproducing-kernel integral operator on the state's lattice.

    (K psi)(x') = integral K(x'; x) psi(x) dp dq / 2 pi hbar, evaluated on
    the same lattice.  States already in the kernel subspace are reproduced;
    anything else is projected onto it (up to quadrature error).

    Raises LatticeTooCoarse when `tol` is given and the error estimate from
    :func:`quadrature_error_estimate` exceeds it.
    """
    if tol is not None:
        est = quadrature_error_estimate(psi, hbar)
        if est > tol:
            raise LatticeTooCoarse(
                f"estimated quadrature error {est:.3e} exceeds tolerance {tol:.3e}"
            )
    lat = psi.lattice
    ps = lat.p_axis
    qs = lat.q_axis
    wp_, wq_ = lat.trapezoid_weights()

    # K(x'; x) = A[p',p] B[q',q] exp(i p q'/2h) exp(-i p' q/2h); contract the
    # separable pieces one output-row at a time to keep memory at O(L^2).
    A = np.exp(-np.subtract.outer(ps, ps) ** 2 / (4.0 * hbar))      # [p', p]
    B = np.exp(-np.subtract.outer(qs, qs) ** 2 / (4.0 * hbar))      # [q', q]
    E = np.exp(1j * np.multiply.outer(ps, qs) / (2.0 * hbar))       # [p, q']
    src = psi.values * np.outer(wp_, wq_) / (2.0 * math.pi * hbar)  # [p, q]

    out = np.empty_like(src, dtype=np.complex128)
    for i in range(lat.n_p):
        # ph[q] = exp(-i p'_i q / 2 hbar)
        ph = np.exp(-1j * ps[i] * qs / (2.0 * hbar))
        inner = src @ (B * ph[None, :]).T        # [p, q']
        out[i, :] = (A[i, :][:, None] * E * inner).sum(axis=0)
    return SampledState(lat, out)


def toeplitz_apply(
    h: FourierSymbol, psi: SampledState, hbar: float, tol: float | None = None
) -> SampledState:
    """Quantized symbol acting on a state: multiply pointwise, then project."""
    P, Q = psi.lattice.meshes()
    hvals = h.evaluate(P, Q)
    return project(SampledState(psi.lattice, psi.values * hvals), hbar, tol=tol)
