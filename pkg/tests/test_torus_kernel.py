import math

import numpy as np
import pytest

from antiwick import (
    CharacterK,
    GridVector,
    PlanePoint,
    QuadratureSpec,
    ThetaBasis,
    TorusGeometry,
    build_basis,
    check_group_law,
    gram_matrix,
    plane_kernel,
    symmetrize,
    torus_kernel,
    torus_kernel_grid,
    translation_phase,
    twist_phase,
)
from antiwick.torus import KernelEigenBasis
from conftest import LatticeOracle, gaussian_center, translate_to

HBAR = 1.0


def characters_for(geom, count=4):
    box1, box2 = geom.inverse_periods()
    fracs = [(0.0, 0.0), (0.31, 0.0), (0.0, 0.57), (0.42, 0.73)][:count]
    return [CharacterK(f1 * box1, f2 * box2) for f1, f2 in fracs]


def midpoint_grid(geom, n):
    ps = (np.arange(n) + 0.5) * geom.a / n
    qs = (np.arange(n) + 0.5) * geom.b / n
    P, Q = np.meshgrid(ps, qs, indexing="ij")
    w = (geom.a / n) * (geom.b / n) / (2.0 * math.pi * geom.hbar)
    return P, Q, w


class TestTwistPhase:
    def test_identity(self, geom_n1):
        g = GridVector.of(geom_n1, 0, 0)
        assert twist_phase(g, CharacterK(0.3, 0.9), HBAR) == 1.0

    def test_single_period_trivial_character(self, geom_n1):
        g = GridVector.of(geom_n1, 1, 0)
        assert abs(twist_phase(g, CharacterK(0.0, 0.0), HBAR) - 1.0) < 1e-12

    def test_diagonal_parity(self, geom_n1, geom_n2, geom_n3):
        for geom in (geom_n1, geom_n2, geom_n3):
            g = GridVector.of(geom, 1, 1)
            val = twist_phase(g, CharacterK(0.0, 0.0), geom.hbar)
            assert abs(val - (-1.0) ** geom.level_N) < 1e-10


class TestGroupLaw:
    @pytest.mark.parametrize("fixture", ["geom_n1", "geom_n2"])
    def test_all_small_pairs(self, fixture, request):
        geom = request.getfixturevalue(fixture)
        for k in characters_for(geom):
            for m1 in range(-2, 3):
                for n1 in range(-2, 3):
                    for m2 in range(-2, 3):
                        for n2 in range(-2, 3):
                            g = GridVector.of(geom, m1, n1)
                            gp = GridVector.of(geom, m2, n2)
                            assert check_group_law(geom, k, g, gp)

    def test_negative_control_broken_geometry(self):
        # fabricate an inadmissible cell (a*b != 2*pi*hbar*N), bypassing the
        # constructor validation deliberately
        geom = object.__new__(TorusGeometry)
        object.__setattr__(geom, "a", 1.0)
        object.__setattr__(geom, "b", 1.0)
        object.__setattr__(geom, "hbar", 1.0)
        object.__setattr__(geom, "level_N", 1)
        k = CharacterK(0.3, 0.7)
        failures = [
            (m1, n1, m2, n2)
            for m1 in range(-2, 3)
            for n1 in range(-2, 3)
            for m2 in range(-2, 3)
            for n2 in range(-2, 3)
            if not check_group_law(
                geom, k, GridVector.of(geom, m1, n1), GridVector.of(geom, m2, n2)
            )
        ]
        assert failures


class TestTorusKernel:
    def test_center_summand_reduces_to_plane_kernel(self, geom_n1):
        g0 = GridVector.of(geom_n1, 0, 0)
        k = CharacterK(0.4, 1.1)
        x = PlanePoint(0.3, 0.8)
        assert twist_phase(g0, k, HBAR) == 1.0
        assert translation_phase(PlanePoint(g0.g1, g0.g2), x, HBAR) == 1.0

    def test_hermitian_symmetry(self, geom_n1, geom_n2):
        rng = np.random.default_rng(21)
        for geom in (geom_n1, geom_n2):
            k = characters_for(geom)[3]
            for _ in range(10):
                xp = PlanePoint(rng.uniform(0, geom.a), rng.uniform(0, geom.b))
                x = PlanePoint(rng.uniform(0, geom.a), rng.uniform(0, geom.b))
                v1 = torus_kernel(xp, x, geom, k)
                v2 = torus_kernel(x, xp, geom, k)
                assert abs(v1 - np.conj(v2)) < 1e-10

    def test_summand_against_lattice_operator_oracle(self, geom_n1):
        # the closed form twist * translation-phase * K(x'; x+g) must match
        # the quadrature overlap <eta_x', twist * (translate eta_x)>
        oracle = LatticeOracle(span=13.0, n=241, hbar=HBAR)
        k = CharacterK(0.37, 1.11)
        x = PlanePoint(0.4, 0.9)
        xp = PlanePoint(1.9, 0.3)
        eta_xp = oracle.sample(gaussian_center(xp, HBAR))
        for m, n in [(1, 0), (0, 1), (1, 1), (-1, 1), (2, -1)]:
            g = GridVector.of(geom_n1, m, n)
            gpt = PlanePoint(g.g1, g.g2)
            moved = oracle.sample(translate_to(gpt, gaussian_center(x, HBAR), HBAR))
            lhs = twist_phase(g, k, HBAR) * oracle.overlap(eta_xp, moved)
            rhs = (
                twist_phase(g, k, HBAR)
                * translation_phase(gpt, x, HBAR)
                * plane_kernel(xp, PlanePoint(x.p + g.g1, x.q + g.g2), HBAR)
            )
            assert abs(lhs - rhs) < 1e-10

    def test_trace_equals_dimension(self, geom_n1, geom_n2, geom_n3):
        for geom in (geom_n1, geom_n2, geom_n3):
            for k in characters_for(geom, 3):
                P, Q, w = midpoint_grid(geom, 48)
                diag = torus_kernel_grid(P, Q, P, Q, geom, k)
                trace = float(np.sum(diag.real) * w)
                assert abs(trace - geom.level_N) < 1e-7
                assert np.abs(diag.imag).max() < 1e-10

    def test_reproducing_property(self, geom_n1, geom_n2):
        rng = np.random.default_rng(17)
        for geom in (geom_n1, geom_n2):
            k = characters_for(geom)[1]
            P, Q, w = midpoint_grid(geom, 56)
            for _ in range(3):
                xp = PlanePoint(rng.uniform(0, geom.a), rng.uniform(0, geom.b))
                x = PlanePoint(rng.uniform(0, geom.a), rng.uniform(0, geom.b))
                left = torus_kernel_grid(xp.p, xp.q, P, Q, geom, k)
                right = torus_kernel_grid(P, Q, x.p, x.q, geom, k)
                folded = complex(np.sum(left * right) * w)
                direct = torus_kernel(xp, x, geom, k)
                assert abs(folded - direct) < 1e-7


class TestThetaBasis:
    def test_gram_identity(self, geom_n1, geom_n2, geom_n3):
        quad = QuadratureSpec(points_per_axis=64, gram_tol=1e-8)
        for geom in (geom_n1, geom_n2, geom_n3):
            for k in characters_for(geom):
                basis = ThetaBasis.build(geom, k)
                G = gram_matrix(basis, quad)
                assert np.abs(G - np.eye(geom.level_N)).max() < 1e-8

    def test_index_range_checked(self, geom_n2):
        basis = ThetaBasis.build(geom_n2, CharacterK(0.0, 0.0))
        with pytest.raises(IndexError):
            basis.value(2, PlanePoint(0.1, 0.1))
        with pytest.raises(IndexError):
            basis.value(-1, PlanePoint(0.1, 0.1))

    def test_expansion_matches_grid_sum(self, geom_n1, geom_n2):
        rng = np.random.default_rng(29)
        for geom in (geom_n1, geom_n2):
            for k in characters_for(geom, 2):
                basis = ThetaBasis.build(geom, k)
                for _ in range(10):
                    xp = PlanePoint(rng.uniform(0, geom.a), rng.uniform(0, geom.b))
                    x = PlanePoint(rng.uniform(0, geom.a), rng.uniform(0, geom.b))
                    expansion = sum(
                        np.conj(basis.value(j, xp)) * basis.value(j, x)
                        for j in range(geom.level_N)
                    )
                    direct = torus_kernel(xp, x, geom, k)
                    assert abs(expansion - direct) < 1e-7

    def test_expansion_tracks_cell_translation(self, geom_n1):
        # same identity evaluated one period away in q: the quasi-periodic
        # phases of the members must conspire to reproduce the kernel there
        k = CharacterK(0.22, 0.64)
        basis = ThetaBasis.build(geom_n1, k)
        xp = PlanePoint(0.7, 0.2)
        x = PlanePoint(1.1, 0.5)
        shifted = PlanePoint(x.p, x.q + geom_n1.b)
        expansion = sum(
            np.conj(basis.value(j, xp)) * basis.value(j, shifted)
            for j in range(geom_n1.level_N)
        )
        direct = torus_kernel(xp, shifted, geom_n1, k)
        assert abs(expansion - direct) < 1e-7


class TestSymmetrize:
    def test_coherent_state_maps_to_kernel_column(self, geom_n1):
        k = CharacterK(0.9, 0.31)
        x0 = PlanePoint(0.6, 1.2)
        sym = symmetrize(gaussian_center(x0, HBAR), geom_n1, k, tol=1e-12)
        rng = np.random.default_rng(31)
        for _ in range(8):
            y = PlanePoint(rng.uniform(0, geom_n1.a), rng.uniform(0, geom_n1.b))
            got = complex(sym(y.p, y.q))
            want = torus_kernel(y, x0, geom_n1, k)
            assert abs(got - want) < 1e-9

    def test_zero_maps_to_zero(self, geom_n1):
        sym = symmetrize(lambda p, q: np.zeros(np.shape(p)), geom_n1, CharacterK(0.1, 0.2))
        assert complex(sym(0.3, 0.4)) == 0.0

    def test_twisted_quasi_periodicity(self, geom_n1):
        # f(y - g) = conj(twist * cocycle) f(y) for g = (a, 0)
        k = CharacterK(0.45, 0.8)
        sym = symmetrize(gaussian_center(PlanePoint(0.5, 0.5), HBAR), geom_n1, k)
        g = GridVector.of(geom_n1, 1, 0)
        y = PlanePoint(1.3, 0.7)
        lhs = complex(sym(y.p - g.g1, y.q - g.g2))
        phase = twist_phase(g, k, HBAR) * np.exp(
            1j * (g.g1 * y.q - y.p * g.g2) / (2.0 * HBAR)
        )
        rhs = np.conj(phase) * complex(sym(y.p, y.q))
        assert abs(lhs - rhs) < 1e-9


class TestFallbackBasis:
    def test_forced_fallback_reconstructs_kernel(self, geom_n1):
        k = CharacterK(0.25, 0.5)
        quad = QuadratureSpec(points_per_axis=48, gram_tol=1e-8)
        basis = build_basis(geom_n1, k, quad, force_fallback=True)
        assert isinstance(basis, KernelEigenBasis)
        G = gram_matrix(basis, QuadratureSpec(points_per_axis=40, gram_tol=1e-8))
        assert np.abs(G - np.eye(geom_n1.level_N)).max() < 1e-6
        rng = np.random.default_rng(41)
        for _ in range(5):
            xp = PlanePoint(rng.uniform(0, geom_n1.a), rng.uniform(0, geom_n1.b))
            x = PlanePoint(rng.uniform(0, geom_n1.a), rng.uniform(0, geom_n1.b))
            expansion = sum(
                np.conj(basis.value(j, xp)) * basis.value(j, x)
                for j in range(geom_n1.level_N)
            )
            assert abs(expansion - torus_kernel(xp, x, geom_n1, k)) < 1e-6

    def test_healthy_basis_prefers_closed_form(self, geom_n2):
        basis = build_basis(geom_n2, CharacterK(0.1, 0.3))
        assert isinstance(basis, ThetaBasis)
