"""Dirichlet soup samplers against enumeration, rejection and exact oracles."""

import math
from collections import Counter

import numpy as np
import pytest
from numpy.random import Philox

from soup2d import stats
from soup2d._core import STATUS_EXITED, sim_srw_exit
from soup2d.dirichlet import ball_solver, rho_measure, solver_for
from soup2d.errors import DomainError
from soup2d.geometry import Domain, neighbors
from soup2d.soup_dirichlet import (DirichletSoupSampler, occupation_field,
                                   sample_conditioned_backward,
                                   sample_conditioned_forward, sample_soup,
                                   sample_soup_via_excursions, soup_sampler,
                                   vacancy_probability)
from soup2d.streams import StreamFactory

P_LEVEL = 0.01


def test_forward_on_ball_one_single_jump():
    fac = StreamFactory(1)
    for rep in range(2000):
        t = sample_conditioned_forward(fac.replica(rep), Domain.ball(1),
                                       [(0, 0)], (1, 0))
        assert len(t) == 1
        assert tuple(t.sites[0]) == (1, 0)
        assert t.killed


def test_forward_null_conditioning_rejected():
    with pytest.raises(DomainError):
        sample_conditioned_forward(StreamFactory(0).replica(0),
                                   Domain.ball(1), [(0, 0)], (0, 0))


def _transform_probs(solver, K, z):
    h = solver.avoid_field(K)

    def hval(p):
        return 1.0 if p not in solver.domain.index else h[solver.domain.index[p]]

    ws = [hval(q) for q in neighbors(z)]
    total = sum(ws)
    return {q: w / total for q, w in zip(neighbors(z), ws)}


def test_forward_two_step_enumeration():
    """Empirical 2-step prefixes on B_2 match the exact transformed chain."""
    Kp = Domain.ball(2)
    solver = solver_for(Kp)
    K = ((0, 0),)
    x = (1, 0)
    # exact category probabilities: truncated path signatures (<= 3 sites)
    probs = {}
    p1 = _transform_probs(solver, K, x)
    for z1, q1 in p1.items():
        if q1 == 0.0:
            continue
        if z1 not in Kp.index:
            probs[(x,)] = probs.get((x,), 0.0) + q1
            continue
        p2 = _transform_probs(solver, K, z1)
        for z2, q2 in p2.items():
            if q2 == 0.0:
                continue
            if z2 not in Kp.index:
                probs[(x, z1)] = probs.get((x, z1), 0.0) + q1 * q2
            else:
                probs[(x, z1, z2)] = probs.get((x, z1, z2), 0.0) + q1 * q2
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)
    fac = StreamFactory(7)
    counts = Counter()
    n = 100_000
    for rep in range(n):
        t = sample_conditioned_forward(fac.replica(rep), Kp, K, x)
        sig = tuple(map(tuple, t.sites[:3]))
        counts[sig] += 1
    cats = sorted(probs)
    observed = np.array([counts.get(c, 0) for c in cats], dtype=float)
    assert observed.sum() == n, "unexpected path signature seen"
    p = stats.histogram_gof_pvalue(observed, np.array([probs[c] for c in cats]))
    assert p >= P_LEVEL


def test_backward_matches_rejection_oracle():
    """h_A-transform law equals rejection sampling on B_2 (chi-square)."""
    Kp = Domain.ball(2)
    A = ((0, 0), (1, 0))
    x = (1, 0)
    n = 40_000
    fac = StreamFactory(3)
    sig_h = Counter()
    for rep in range(n):
        t = sample_conditioned_backward(fac.replica(rep), Kp, A, x)
        sig_h[tuple(map(tuple, t.sites))] += 1
        assert t.holds[0] == 0.0
        for p in map(tuple, t.sites[1:]):
            assert p not in A
    # rejection oracle: uniform first step, then SRW to exit, reject on return
    mask, ox, oy = Kp.mask_arrays()
    sig_r = Counter()
    bg = Philox(key=99)
    gen = np.random.Generator(Philox(key=100))
    accepted = 0
    while accepted < n:
        z1 = neighbors(x)[gen.integers(4)]
        if z1 in A:
            continue
        if z1 not in Kp.index:
            sig_r[(x,)] += 1
            accepted += 1
            continue
        path, status = sim_srw_exit(bg, z1[0], z1[1], mask, ox, oy, 10**6)
        assert status == STATUS_EXITED
        if any(tuple(p) in A for p in map(tuple, path)):
            continue
        sig_r[(x,) + tuple(map(tuple, path))] += 1
        accepted += 1
    cats = sorted(set(sig_h) | set(sig_r))
    a = np.array([sig_h.get(c, 0) for c in cats], dtype=float)
    b = np.array([sig_r.get(c, 0) for c in cats], dtype=float)
    assert stats.two_sample_hist_pvalue(a, b) >= P_LEVEL


def test_soup_count_and_entries():
    fac = StreamFactory(11)
    K = ((0, 0),)
    Kp = Domain.ball(8)
    A = ((0, 0), (1, 0), (0, 1), (-1, 0))
    u = 2.0
    rho = rho_measure(K, Kp, A)
    sampler = soup_sampler(K, Kp, A)
    n = 30_000
    counts = np.zeros(n, dtype=int)
    entries = Counter()
    for rep in range(n):
        s = sampler.sample(fac.replica(rep), u)
        counts[rep] = len(s)
        for e in s.entries():
            entries[e] += 1
        for traj, label in s.trajectories:
            assert 0.0 <= label <= u
    assert stats.poisson_gof_pvalue(counts, u * rho.total) >= P_LEVEL
    cats = [p for p in A if rho[p] > 0]
    obs = np.array([entries[c] for c in cats], dtype=float)
    probs = np.array([rho[c] / rho.total for c in cats])
    assert stats.histogram_gof_pvalue(obs, probs) >= P_LEVEL


def test_soup_u_zero_empty():
    s = sample_soup(StreamFactory(0).replica(0), [(0, 0)], Domain.ball(2),
                    [(0, 0), (1, 0)], 0.0)
    assert len(s) == 0


def test_occupation_zero_on_K_and_outside():
    fac = StreamFactory(13)
    Kp = Domain.ball(4)
    probe_window = ((0, 0), (1, 0), (9, 9))
    hit_any = False
    for rep in range(500):
        s = sample_soup(fac.replica(rep), [(0, 0)], Kp, [(0, 0), (1, 0)], 3.0)
        occ = occupation_field(s, probe_window)
        assert occ[(0, 0)] == 0.0
        assert occ[(9, 9)] == 0.0
        hit_any |= occ[(1, 0)] > 0
    assert hit_any
    empty = occupation_field(
        sample_soup(fac.replica(10_000), [(0, 0)], Kp, [(0, 0), (1, 0)], 0.0),
        probe_window,
    )
    assert (empty.times == 0).all()


def test_mean_occupation_identity():
    # E[L_x] = u P_x[H_0 > T_{B_N}]^2
    N, u = 8, 1.0
    x = (1, 0)
    solver = ball_solver(N)
    target = u * solver.avoid([(0, 0)], x) ** 2
    fac = StreamFactory(17)
    sampler = soup_sampler(((0, 0),), Domain.ball(N), ((0, 0), x))
    vals = np.empty(30_000)
    for rep in range(vals.size):
        s = sampler.sample(fac.replica(rep), u)
        vals[rep] = occupation_field(s, [x])[x]
    est, se, z = stats.z_against(vals, target)
    assert abs(z) <= 3


def test_vacancy_against_exact():
    fac = StreamFactory(19)
    K, Kp, A, u = ((0, 0),), Domain.ball(1), ((0, 0), (1, 0)), 1.0
    exact = vacancy_probability(K, Kp, A, u)
    assert exact == pytest.approx(math.exp(-9.0 / 16.0), abs=1e-14)
    n = 30_000
    vac = sum(
        1 for rep in range(n)
        if len(sample_soup(fac.replica(rep), K, Kp, A, u)) == 0
    )
    _, _, z = stats.binomial_z(vac, n, exact)
    assert abs(z) <= 3


def test_forward_holds_unit_exponential():
    fac = StreamFactory(23)
    holds = []
    sampler = soup_sampler(((0, 0),), Domain.ball(6), ((0, 0), (2, 0)))
    for rep in range(4000):
        s = sampler.sample(fac.replica(rep), 2.0)
        for traj, _ in s.trajectories:
            holds.extend(traj.forward.holds.tolist())
    assert stats.ks_exponential_pvalue(np.array(holds), 1.0) >= P_LEVEL


class TestExcursions:
    def test_u_zero_empty(self):
        ens = sample_soup_via_excursions(
            StreamFactory(0).replica(0), [(0, 0)], Domain.ball(4),
            [(0, 0), (1, 0)], 0.0,
        )
        assert len(ens) == 0 and ens.n_excursions == 0

    def test_raw_count_poisson(self):
        # with K = empty there is no rejection; count ~ Poisson(u lambda_*/4)
        Kp = Domain.ball(8)
        lam = Kp.boundary_edge_count()
        u = 12.0 / lam
        fac = StreamFactory(29)
        n = 20_000
        counts = np.array([
            sample_soup_via_excursions(fac.replica(rep), (), Kp,
                                       [(0, 0), (1, 0)], u).n_excursions
            for rep in range(n)
        ])
        assert stats.poisson_gof_pvalue(counts, u * lam / 4.0) >= P_LEVEL

    def test_cross_sampler_consistency(self):
        Kp = Domain.ball(8)
        A = ((0, 0), (1, 0), (0, 1), (-1, 0))
        K = ((0, 0),)
        u = 12.0 / Kp.boundary_edge_count()
        fac = StreamFactory(31)
        n = 20_000
        idx = {p: i for i, p in enumerate(A)}
        exc_entries = np.zeros(len(A))
        dir_entries = np.zeros(len(A))
        exc_counts = np.zeros(n, dtype=int)
        for rep in range(n):
            ens = sample_soup_via_excursions(fac.replica(0, rep), K, Kp, A, u)
            exc_counts[rep] = len(ens)
            for e in ens.entries():
                exc_entries[idx[e]] += 1
            s = sample_soup(fac.replica(1, rep), K, Kp, A, u)
            for e in s.entries():
                dir_entries[idx[e]] += 1
        rho = rho_measure(K, Kp, A)
        assert stats.poisson_gof_pvalue(exc_counts, u * rho.total) >= P_LEVEL
        assert stats.two_sample_hist_pvalue(exc_entries, dir_entries) >= P_LEVEL

    def test_requires_strict_inclusion(self):
        with pytest.raises(DomainError):
            sample_soup_via_excursions(StreamFactory(0).replica(0), [(0, 0)],
                                       Domain.ball(4), [(0, 0)], 1.0)


def test_compatibility_restriction():
    """Soups built on A' restricted to A-hitting trajectories match A-soups.

    Count law and first-A-visit histogram are the testable surrogates of the
    patching consistency of the underlying intensity measures.
    """
    Kp = Domain.ball(8)
    K = ((0, 0),)
    A = ((0, 0), (1, 0))
    Ap = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1))
    u = 3.0
    rhoA = rho_measure(K, Kp, A)
    fac = StreamFactory(37)
    n = 25_000
    counts = np.zeros(n, dtype=int)
    entries = Counter()
    sampler = soup_sampler(K, Kp, Ap)
    for rep in range(n):
        s = sampler.sample(fac.replica(rep), u)
        hits = 0
        for traj, _ in s.trajectories:
            sites = traj.forward.sites
            inA = np.zeros(len(sites), dtype=bool)
            for (ax, ay) in A:
                inA |= (sites[:, 0] == ax) & (sites[:, 1] == ay)
            if inA.any():
                hits += 1
                entries[tuple(sites[int(np.argmax(inA))])] += 1
        counts[rep] = hits
    assert stats.poisson_gof_pvalue(counts, u * rhoA.total) >= P_LEVEL
    cats = [p for p in A if rhoA[p] > 0]
    obs = np.array([entries[c] for c in cats], dtype=float)
    probs = np.array([rhoA[c] / rhoA.total for c in cats])
    assert stats.histogram_gof_pvalue(obs, probs) >= P_LEVEL
