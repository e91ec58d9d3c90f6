"""Massive (exponentially killed) potential theory."""

import math

import numpy as np
import pytest
from numpy.random import Philox

from soup2d._core import STATUS_KILLED, sim_massive
from soup2d.dirichlet import capacity_finite_N
from soup2d.errors import AccuracyError, DomainError
from soup2d.massive import (MassiveRegime, _truncated_solver, capacity_massive,
                            capacity_massive_exponent, massive_equilibrium,
                            massive_hit_probability,
                            massive_hit_probability_exact)
from soup2d.potential import massive_green, massive_green_many


def test_regime_canonical():
    r = MassiveRegime.canonical(64)
    assert r.eps * r.t_N == pytest.approx(1.0)
    with pytest.raises(DomainError):
        MassiveRegime(N=64, eps=1.0, t_N=r.t_N)


class TestHitProbability:
    def test_on_target(self):
        assert massive_hit_probability(0.3, [(0, 0)], (0, 0)) == 1.0

    def test_routes_agree(self):
        A = ((0, 0), (1, 0), (0, -1))
        for x in ((2, 1), (3, -2), (-1, 4), (5, 5)):
            lat, bound = massive_hit_probability(0.25, A, x, full=True)
            ex = massive_hit_probability_exact(0.25, A, x)
            assert bound < 1e-9
            assert lat == pytest.approx(ex, abs=1e-8)

    def test_large_eps_vanishes(self):
        assert massive_hit_probability_exact(1e4, [(0, 0)], (1, 0)) < 1e-4

    def test_bad_eps(self):
        with pytest.raises(DomainError):
            massive_hit_probability(0.0, [(0, 0)], (1, 0))

    def test_truncation_accuracy_error(self):
        with pytest.raises(AccuracyError) as err:
            massive_hit_probability(0.01, [(0, 0)], (1, 0), trunc_radius=12)
        assert err.value.achieved > 1e-6

    def test_monte_carlo_oracle(self):
        # P_(1,0)[H_0 < xi(0.01)] against 10^6 killed walks
        eps = 0.01
        exact = massive_hit_probability_exact(eps, [(0, 0)], (1, 0))
        n = 1_000_000
        hits = 0
        bg = Philox(key=20240917)
        for _ in range(n):
            path, status = sim_massive(bg, 1, 0, eps, 10**7)
            assert status == STATUS_KILLED
            if ((path[:, 0] == 0) & (path[:, 1] == 0)).any():
                hits += 1
        se = math.sqrt(exact * (1 - exact) / n)
        assert abs(hits / n - exact) <= 3 * se


class TestEquilibrium:
    def test_singleton_green_identity(self):
        # total mass of e_{eps,{0}} equals 1/g_eps(0,0); routes independent
        for eps in (0.05, 0.3, 2.0):
            e_green = massive_equilibrium(eps, [(0, 0)])
            e_lat = massive_equilibrium(eps, [(0, 0)], method="lattice")
            target = 1.0 / massive_green(eps, (0, 0))
            assert e_green.total == pytest.approx(target, rel=1e-10)
            assert e_lat.total == pytest.approx(target, rel=1e-5)

    def test_last_exit_identity(self):
        # P_x[H_A < xi] = sum_y g_eps(x,y) e_{eps,A}(y), sides independent
        eps = 0.2
        for A in ([(0, 0)], [(0, 0), (1, 0)], [(0, 0), (2, 1), (-1, -1)]):
            e = massive_equilibrium(eps, A)
            for x in ((1, 1), (3, 0), (-2, 4), (5, 1)):
                lhs, bound = massive_hit_probability(eps, A, x, full=True)
                g_row = massive_green_many(
                    eps, [(x[0] - y[0], x[1] - y[1]) for y in e.support]
                )
                rhs = float(np.dot(g_row, e.weights))
                assert lhs == pytest.approx(rhs, rel=1e-5)

    def test_monotone_in_eps(self):
        A = [(0, 0), (2, 0)]
        prev = None
        for eps in (0.05, 0.1, 0.2, 0.5, 1.0):
            w = massive_equilibrium(eps, A).weights
            if prev is not None:
                assert (w >= prev - 1e-12).all()
            prev = w

    def test_sweeping_analogue(self):
        # e_{eps,A'}(x) = sum_y e_{eps,A}(y) P_{eps,y}[hit A' at x], with the
        # killed-walk hitting kernel from the exact Green matrices
        eps = 0.3
        A = ((0, 0), (1, 0), (0, 1), (2, 0))
        Ap = ((0, 0), (1, 0))
        eA = massive_equilibrium(eps, A)
        eAp = massive_equilibrium(eps, Ap)
        G_Ap = massive_green_many(
            eps, [(a[0] - b[0], a[1] - b[1]) for a in Ap for b in Ap]
        ).reshape(2, 2)
        Ginv = np.linalg.inv(G_Ap)
        swept = np.zeros(2)
        for y, wy in zip(eA.support, eA.weights):
            if y in Ap:
                h = np.zeros(2)
                h[Ap.index(y)] = 1.0
            else:
                row = massive_green_many(
                    eps, [(y[0] - b[0], y[1] - b[1]) for b in Ap]
                )
                h = row @ Ginv
            swept += wy * h
        assert np.allclose(swept, eAp.weights, atol=1e-9)

    def test_canonical_scaling(self):
        # (2 log N / pi) e_{eps_N,{0}}(0) -> 1 with shrinking deviation
        devs = []
        for N in (64, 128, 256):
            r = MassiveRegime.canonical(N)
            e0 = massive_equilibrium(r.eps, [(0, 0)]).total
            devs.append(abs((2.0 * math.log(N) / math.pi) * e0 - 1.0))
        assert devs[2] < devs[1] < devs[0]


class TestCapacityMassive:
    def test_singleton_zero(self):
        for N in (64, 128):
            assert capacity_massive([(0, 0)], N) == pytest.approx(0.0,
                                                                  abs=1e-12)

    def test_pair_converges(self):
        errs = [abs(capacity_massive([(0, 0), (1, 0)], N) - 0.5)
                for N in (64, 128, 256)]
        assert errs[2] < errs[1] < errs[0]

    def test_exponent_form_converges(self):
        errs = [abs(capacity_massive_exponent([(0, 0), (1, 0)], N) - 0.5)
                for N in (64, 128, 256)]
        assert errs[2] < errs[1] < errs[0]

    def test_agrees_with_dirichlet_at_matched_N(self):
        # routes differ by O(1/log N); their gap is small next to either error
        for N in (64, 128):
            vd = capacity_finite_N([(0, 0), (1, 0)], N).value
            vm = capacity_massive([(0, 0), (1, 0)], N)
            err_d = abs(vd - 0.5)
            err_m = abs(vm - 0.5)
            assert abs(vd - vm) <= err_d + err_m

    def test_requires_origin(self):
        with pytest.raises(DomainError):
            capacity_massive([(1, 0)], 64)
