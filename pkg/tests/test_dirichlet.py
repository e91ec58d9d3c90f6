"""Dirichlet potential theory: exact identities and convergence behavior."""

import math

import numpy as np
import pytest

from soup2d.dirichlet import (DirichletSolver, ball_solver, capacity,
                              capacity_exact, capacity_finite_N,
                              equilibrium_measure, green_dirichlet,
                              harmonic_measure, harmonic_measure_exact,
                              rho_measure, avoid_probability)
from soup2d.errors import DomainError
from soup2d.geometry import Domain, ball_points, neighbors
from soup2d.potential import potential_kernel, potential_kernel_many


def test_ball_one_exact_values():
    s = ball_solver(1)
    assert green_dirichlet(s, (0, 0), (0, 0)) == pytest.approx(4.0 / 3.0,
                                                               abs=1e-14)
    assert green_dirichlet(s, (5, 5), (0, 0)) == 0.0
    assert green_dirichlet(s, (0, 0), (5, 5)) == 0.0
    assert avoid_probability(s, [(0, 0)], (1, 0)) == pytest.approx(0.75)
    assert avoid_probability(s, [(0, 0)], (0, 0)) == 0.0
    assert avoid_probability(s, [(0, 0)], (9, 9)) == 1.0


def test_equilibrium_examples():
    s = ball_solver(1)
    e = equilibrium_measure(s, [(0, 0)])
    assert e[(0, 0)] == pytest.approx(0.75)
    assert e.normalized().total == pytest.approx(1.0)
    # on the full interior boundary ring, weights are one-step exit probs
    s2 = ball_solver(2)
    ring = s2.domain.interior_boundary()
    e2 = equilibrium_measure(s2, ring)
    for p in ring:
        ext = sum(1 for q in neighbors(p) if q not in s2.domain.index)
        assert e2[p] == pytest.approx(ext / 4.0, abs=1e-12)
    with pytest.raises(DomainError):
        equilibrium_measure(s2, [])


def test_green_symmetry_random_pairs():
    rng = np.random.default_rng(0)
    s = ball_solver(64)
    pts = s.domain.points
    for _ in range(5):
        x = pts[rng.integers(len(pts))]
        y = pts[rng.integers(len(pts))]
        gx = green_dirichlet(s, x, y)
        gy = green_dirichlet(s, y, x)
        assert gx == pytest.approx(gy, rel=1e-10, abs=1e-12)


def test_restriction_identity():
    # g_D = g_{D'} + E[hit U before exit; g_D(X_{H_U}, .)] for D' = D minus U
    D = Domain.ball(6)
    U = tuple(sorted(((2, 2), (-3, 0), (0, -4))))  # hitting_matrix column order
    Dp = Domain([p for p in D.points if p not in set(U)])
    sD = DirichletSolver(D)
    sDp = DirichletSolver(Dp)
    H = sD.hitting_matrix(U)
    for x in ((1, 0), (-2, 1)):
        for y in ((0, 0), (3, 1)):
            lhs = sD.green(x, y)
            correction = sum(
                H[sD.domain.index[x], j] * sD.green(u, y)
                for j, u in enumerate(U)
            )
            assert lhs == pytest.approx(sDp.green(x, y) + correction,
                                        abs=1e-9)


def test_green_potential_identity_b8():
    # g_{B_8}(x,y) = E_x[a(X_T - y)] - a(x - y), exit law by exact solve
    s = ball_solver(8)
    exterior = s.domain.exterior_boundary()
    # exit distribution: P_x[X_T = b] = sum_{z in D, z~b} g(x,z)/4
    for x, y in (((1, 0), (0, 0)), ((2, -1), (-1, 3)), ((0, 0), (0, 0))):
        gcol = s.green_column(x)  # symmetric: g(x, z) = g(z, x)
        exit_prob = {}
        for b in exterior:
            acc = 0.0
            for z in neighbors(b):
                if z in s.domain.index:
                    acc += 0.25 * gcol[s.domain.index[z]]
            exit_prob[b] = acc
        assert sum(exit_prob.values()) == pytest.approx(1.0, abs=1e-10)
        ea = sum(
            p * potential_kernel((b[0] - y[0], b[1] - y[1]))
            for b, p in exit_prob.items()
        )
        rhs = ea - potential_kernel((x[0] - y[0], x[1] - y[1]))
        assert s.green(x, y) == pytest.approx(rhs, rel=1e-7, abs=1e-9)


def test_sweeping_identity():
    # e_{A',K'}(x) = P_{e_{A,K'}}[H_{A'} < T_{K'}, X_{H_{A'}} = x]
    s = ball_solver(8)
    A = ((0, 0), (1, 0), (0, 1), (2, 0))
    Ap = ((0, 0), (1, 0))
    eA = equilibrium_measure(s, A)
    eAp = equilibrium_measure(s, Ap)
    H = s.hitting_matrix(Ap)
    for j, x in enumerate(Ap):
        swept = sum(
            eA[y] * H[s.domain.index[y], j] for y in A
        )
        assert swept == pytest.approx(eAp[x], abs=1e-9)


def test_avoid_harmonicity():
    s = ball_solver(16)
    h = s.avoid_field(((0, 0),))
    for x in ((3, 2), (-5, 0), (1, 1)):
        acc = 0.0
        for q in neighbors(x):
            acc += 1.0 if q not in s.domain.index else h[s.domain.index[q]]
        assert 0.25 * acc == pytest.approx(h[s.domain.index[x]], abs=1e-10)


def test_avoid_martingale_limit():
    # (2/pi) log N P_x[H_0 > T_{B_N}] -> a(x), improving along N
    x = (3, 2)
    a = potential_kernel(x)
    errs = []
    for N in (64, 128, 256):
        v = (2.0 / math.pi) * math.log(N) * ball_solver(N).avoid([(0, 0)], x)
        errs.append(abs(v - a))
    assert errs[2] < errs[1] < errs[0]


class TestHarmonicMeasure:
    def test_singleton(self):
        res = harmonic_measure([(0, 0)])
        assert res.measure[(0, 0)] == 1.0
        assert res.error_estimate == 0.0

    def test_two_point_symmetry(self):
        # the exact limit is (1/2, 1/2); the finite-N extrapolation retains a
        # small ball-centering asymmetry covered by its error estimate
        res = harmonic_measure([(0, 0), (1, 0)], (32, 64, 128))
        tol = max(5 * res.error_estimate, 1e-3)
        assert res.measure[(0, 0)] == pytest.approx(0.5, abs=tol)
        exact, cap = harmonic_measure_exact([(0, 0), (1, 0)])
        assert exact[(0, 0)] == pytest.approx(0.5, abs=1e-12)
        assert cap == pytest.approx(0.5, abs=1e-10)

    def test_l_shape_vs_exact(self):
        A = ((0, 0), (1, 0), (0, 1))
        res = harmonic_measure(A, (64, 128, 256))
        exact, _ = harmonic_measure_exact(A)
        for p in A:
            assert abs(res.measure[p] - exact[p]) <= 5 * res.error_estimate
        # corner-heavier on the two extreme points
        assert res.measure[(1, 0)] > res.measure[(0, 0)]
        assert res.measure[(0, 1)] > res.measure[(0, 0)]

    def test_needs_two_points(self):
        with pytest.raises(DomainError):
            harmonic_measure([(0, 0), (1, 0)], (64,))


class TestCapacity:
    def test_singleton_zero(self):
        assert capacity_exact([(0, 0)]) == 0.0
        for N in (32, 64):
            assert capacity_finite_N([(0, 0)], N).value == 0.0

    def test_pair_half(self):
        res = capacity([(0, 0), (1, 0)], (32, 64, 128))
        assert abs(res.value - 0.5) <= 5 * res.error_estimate + 1e-3
        assert res.anchor == (0, 0)

    def test_anchor_invariance(self):
        # sum_x a(x - y) hm(x) independent of y in A
        A = ((0, 0), (1, 0), (0, 1))
        hm, cap = harmonic_measure_exact(A)
        for y in A:
            total = sum(
                hm[x] * potential_kernel((x[0] - y[0], x[1] - y[1]))
                for x in A
            )
            assert total == pytest.approx(cap, abs=1e-9)

    def test_finite_N_decreasing_error(self):
        vals = [capacity_finite_N([(0, 0), (1, 0)], N).value
                for N in (32, 64, 128)]
        errs = [abs(v - 0.5) for v in vals]
        assert errs[2] < errs[1] < errs[0]

    def test_monotone_under_inclusion(self):
        c1 = capacity_exact([(0, 0), (1, 0)])
        c2 = capacity_exact([(0, 0), (1, 0), (0, 1)])
        c3 = capacity_exact([(0, 0), (1, 0), (0, 1), (1, 1)])
        assert c1 < c2 < c3

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            capacity_finite_N([(0, 0), (100, 0)], 32)


class TestRho:
    def test_null_at_K(self):
        rho = rho_measure([(0, 0)], Domain.ball(1), [(0, 0)])
        assert rho.total == 0.0

    def test_nine_sixteenths(self):
        rho = rho_measure([(0, 0)], Domain.ball(1), [(0, 0), (1, 0)])
        assert rho.total == pytest.approx(9.0 / 16.0, abs=1e-14)
        assert rho[(1, 0)] == pytest.approx(9.0 / 16.0, abs=1e-14)

    def test_empty_K_reduces_to_equilibrium(self):
        Kp = Domain.ball(4)
        A = ((0, 0), (1, 0), (0, 2))
        rho = rho_measure((), Kp, A)
        from soup2d.dirichlet import solver_for

        e = equilibrium_measure(solver_for(Kp), A)
        assert np.allclose(rho.weights, e.weights, atol=1e-14)

    def test_inclusion_violations(self):
        with pytest.raises(DomainError):
            rho_measure([(5, 5)], Domain.ball(2), [(0, 0)])
        with pytest.raises(DomainError):
            rho_measure([(0, 0)], Domain.ball(2), [(0, 0), (9, 9)])
