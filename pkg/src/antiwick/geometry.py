"""Shared phase-space domain types: torus geometry, grid vectors, characters,
and periodic Fourier symbols.

Everything here is immutable after construction and safe to share across
threads.  Coordinates are (p, q) with p the momentum-like and q the
position-like direction; the grid has spacings (a, b) and the torus is the
half-open cell [0, a) x [0, b).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianCoefficients, NonIntegralLevel

# Admission gate for user-entered geometry (decimal input is fine at this
# level) versus the strict invariant carried by a constructed geometry.
LEVEL_INPUT_RTOL = 1e-9
LEVEL_STRICT_RTOL = 1e-12


@dataclass(frozen=True)
class PlanePoint:
    """A point (p, q) of the planar phase space."""

    p: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError(f"plane point must be finite, got ({self.p}, {self.q})")

    def shifted(self, dp: float, dq: float) -> "PlanePoint":
        return PlanePoint(self.p + dp, self.q + dq)


@dataclass(frozen=True)
class TorusGeometry:
    """Rectangular phase-space torus with an integral number of Planck cells.

    The cell area must satisfy a*b = 2*pi*hbar*level_N; the constructor
    enforces this to LEVEL_STRICT_RTOL.  Use :func:`validate_geometry` for
    user input, which accepts small decimal slop and renormalizes.
    """

    a: float
    b: float
    hbar: float
    level_N: int

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.hbar <= 0:
            raise ValueError("a, b and hbar must all be positive")
        if self.level_N < 1:
            raise ValueError(f"level_N must be a positive integer, got {self.level_N}")
        area = self.a * self.b
        target = 2.0 * math.pi * self.hbar * self.level_N
        if abs(area - target) > LEVEL_STRICT_RTOL * target:
            raise NonIntegralLevel(
                f"a*b = {area!r} is not 2*pi*hbar*N = {target!r} "
                f"(N = {self.level_N}) within {LEVEL_STRICT_RTOL:g} relative"
            )

    @property
    def planck_cells(self) -> float:
        """Torus area in units of 2*pi*hbar (equals level_N by construction)."""
        return self.a * self.b / (2.0 * math.pi * self.hbar)

    def inverse_periods(self) -> tuple[float, float]:
        """Period box (2*pi*hbar/a, 2*pi*hbar/b) of the character parameter."""
        return 2.0 * math.pi * self.hbar / self.a, 2.0 * math.pi * self.hbar / self.b


def validate_geometry(a: float, b: float, hbar: float) -> TorusGeometry:
    """Admit user-entered spacings, deciding the level from a*b/(2*pi*hbar).

    The ratio must sit within LEVEL_INPUT_RTOL of an integer; the geometry is
    then renormalized exactly onto that integer by adjusting b (a relative
    change below the input tolerance), so the strict constructor invariant
    holds for everything downstream.
    """
    if a <= 0 or b <= 0 or hbar <= 0:
        raise ValueError("a, b and hbar must all be positive")
    ratio = a * b / (2.0 * math.pi * hbar)
    level = round(ratio)
    if level < 1 or abs(ratio - level) > LEVEL_INPUT_RTOL * max(1.0, abs(level)):
        raise NonIntegralLevel(
            f"a*b/(2*pi*hbar) = {ratio!r} is not an integer within "
            f"{LEVEL_INPUT_RTOL:g} (a={a!r}, b={b!r}, hbar={hbar!r})"
        )
    b_exact = 2.0 * math.pi * hbar * level / a
    return TorusGeometry(a=a, b=b_exact, hbar=hbar, level_N=level)


@dataclass(frozen=True)
class GridVector:
    """Lattice translation g = (m*a, n*b) of the covering plane."""

    m: int
    n: int
    g1: float
    g2: float

    @classmethod
    def of(cls, geom: TorusGeometry, m: int, n: int) -> "GridVector":
        return cls(m=m, n=n, g1=m * geom.a, g2=n * geom.b)

    @property
    def norm(self) -> float:
        return math.hypot(self.g1, self.g2)


def _wrap_half_open(value: float, period: float) -> float:
    # `%` of a tiny negative value rounds to the period itself; keep [0, period)
    r = value % period
    return 0.0 if r == period else r


def wrap_to_torus(x: PlanePoint, geom: TorusGeometry) -> PlanePoint:
    """Canonical representative of x in [0, a) x [0, b)."""
    return PlanePoint(_wrap_half_open(x.p, geom.a), _wrap_half_open(x.q, geom.b))


def grid_vectors_within(geom: TorusGeometry, radius: float) -> list[GridVector]:
    """All grid vectors with g1^2 + g2^2 <= radius^2.

    Ordered by (|m| + |n|, m, n) so truncated sums accumulate in a fixed,
    reproducible order.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    mmax = int(math.floor(radius / geom.a))
    nmax = int(math.floor(radius / geom.b))
    r2 = radius * radius
    out = [
        GridVector.of(geom, m, n)
        for m in range(-mmax, mmax + 1)
        for n in range(-nmax, nmax + 1)
        if (m * geom.a) ** 2 + (n * geom.b) ** 2 <= r2
    ]
    out.sort(key=lambda g: (abs(g.m) + abs(g.n), g.m, g.n))
    return out


@dataclass(frozen=True)
class CharacterK:
    """Boundary-condition parameter on the inverse torus.

    Canonically wrapped into [0, 2*pi*hbar/a) x [0, 2*pi*hbar/b).  Note the
    box couples k1 with a and k2 with b exactly as stated; do not swap.
    """

    k1: float
    k2: float

    @classmethod
    def wrapped(cls, geom: TorusGeometry, k1: float, k2: float) -> "CharacterK":
        box1, box2 = geom.inverse_periods()
        return cls(_wrap_half_open(k1, box1), _wrap_half_open(k2, box2))


def character_grid(geom: TorusGeometry, n1: int, n2: int) -> list[CharacterK]:
    """Uniform n1 x n2 sampling of the inverse torus (cell midpoint offsets)."""
    box1, box2 = geom.inverse_periods()
    return [
        CharacterK(box1 * i / n1, box2 * j / n2)
        for i in range(n1)
        for j in range(n2)
    ]


@dataclass(frozen=True)
class FourierSymbol:
    """Real, bounded, grid-periodic classical Hamiltonian given as a truncated
    Fourier series h(p, q) = sum c[m,n] exp(2*pi*i*(m*p/a + n*q/b)).

    Coefficients must close under (m, n) -> (-m, -n) conjugation so the
    series is real-valued.
    """

    geometry: TorusGeometry
    coefficients: tuple[tuple[int, int, complex], ...]

    @classmethod
    def from_dict(
        cls, geom: TorusGeometry, coeffs: dict[tuple[int, int], complex]
    ) -> "FourierSymbol":
        for (m, n), c in coeffs.items():
            mirror = coeffs.get((-m, -n))
            if mirror is None:
                raise NonHermitianCoefficients(
                    f"coefficient ({m},{n}) = {c} has no mirror (-{m},-{n})"
                )
            if abs(mirror - np.conj(c)) > 1e-12 * max(1.0, abs(c)):
                raise NonHermitianCoefficients(
                    f"coefficient ({-m},{-n}) = {mirror} is not conj of "
                    f"({m},{n}) = {c}"
                )
        rows = tuple(
            (m, n, complex(coeffs[(m, n)])) for (m, n) in sorted(coeffs)
        )
        return cls(geometry=geom, coefficients=rows)

    @classmethod
    def constant(cls, geom: TorusGeometry, value: float) -> "FourierSymbol":
        return cls.from_dict(geom, {(0, 0): complex(value)})

    @classmethod
    def cosine(cls, geom: TorusGeometry, m: int, n: int, amplitude: float = 1.0) -> "FourierSymbol":
        """amplitude * cos(2*pi*(m*p/a + n*q/b))."""
        half = complex(amplitude / 2.0)
        if (m, n) == (0, 0):
            return cls.from_dict(geom, {(0, 0): complex(amplitude)})
        return cls.from_dict(geom, {(m, n): half, (-m, -n): half})

    def term_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(m, n, Re c, Im c) as flat arrays, for vectorized evaluation."""
        if not self.coefficients:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z, z
        m = np.array([r[0] for r in self.coefficients], dtype=np.int64)
        n = np.array([r[1] for r in self.coefficients], dtype=np.int64)
        c = np.array([r[2] for r in self.coefficients], dtype=np.complex128)
        return m, n, c.real.copy(), c.imag.copy()

    def evaluate(self, p, q):
        """Evaluate h at (p, q); accepts scalars or broadcasting arrays."""
        m, n, cre, cim = self.term_arrays()
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        phase = (
            2.0 * np.pi
            * (
                np.multiply.outer(p / self.geometry.a, m)
                + np.multiply.outer(q / self.geometry.b, n)
            )
        )
        val = np.cos(phase) @ cre - np.sin(phase) @ cim
        return float(val) if val.ndim == 0 else val

    def value_range(self, n_grid: int = 512) -> tuple[float, float]:
        """(min, max) of h over one period cell, estimated on a fine grid."""
        ps = np.linspace(0.0, self.geometry.a, n_grid, endpoint=False)
        qs = np.linspace(0.0, self.geometry.b, n_grid, endpoint=False)
        vals = self.evaluate(ps[:, None], qs[None, :])
        return float(np.min(vals)), float(np.max(vals))

    def sup_norm(self) -> float:
        """Cheap bound: sum of coefficient moduli."""
        return float(sum(abs(c) for _, _, c in self.coefficients))


def eval_symbol(h: FourierSymbol, x: PlanePoint) -> float:
    """Real value of the periodic symbol at a plane point."""
    return float(h.evaluate(x.p, x.q))
