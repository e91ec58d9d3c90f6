"""Massive interlacement: soups of eps-killed walks, pinned by thinning.

Trajectories enter a finite set A at rate u * e_{eps,A}(x): forward parts are
unconditioned eps-killed walks, backward parts are killed walks conditioned
never to return to A (h-transform with h(w) = P_w[H_A > xi]).  Conditioning
on the origin staying vacant is realized by deleting the (independent
Poisson) subprocess of trajectories that visit it, which matches the
conditional count law u (nu(W_A) - nu(W_0)) exactly.

Per-site holding times of the killed walk are exp(1+eps): at each visited
site the jump clock (rate 1) competes with the killing clock (rate eps), so
lifetimes are exp(eps) as they must be.
"""

from __future__ import annotations

import math

import numpy as np

from . import _core
from .errors import AccuracyError, DomainError
from .geometry import as_point_set
from .massive import _truncated_solver, default_trunc_radius, massive_equilibrium
from .potential import massive_green_many
from .trajectories import BidirectionalTrajectory, KilledTrajectory, SoupSample

GREEN_TOL = 1e-12


class _BackwardGrids:
    """h(w) = P_w[H_A > xi] on a certified box, for the backward h-transform."""

    def __init__(self, eps, A, radius=None):
        self.eps = float(eps)
        self.A = as_point_set(A)
        solver = _truncated_solver(eps, self.A, radius)
        self.radius = solver.radius
        r = solver.radius
        span = 2 * r + 1
        h = np.ones((span, span))
        hit = solver.hit_field()
        for p, i in solver.index.items():
            h[p[0] + r, p[1] + r] = 1.0 - hit[i]
        for (ax, ay) in self.A:
            h[ax + r, ay + r] = 0.0
        self.h_grid = h
        self.offset = -r
        self.bound = float(solver.survival_field().max()) * solver.far_hit_bound

    def h_at(self, p):
        return float(self.h_grid[p[0] - self.offset, p[1] - self.offset])


def _max_steps(eps):
    return int(400.0 / eps) + 10_000


def _forward_part(rng, eps, entry):
    path, status = _core.sim_massive(
        rng.next_stream().bit_generator, entry[0], entry[1], eps, _max_steps(eps)
    )
    if status != _core.STATUS_KILLED:
        raise AccuracyError("massive forward part exceeded its step budget")
    holds = rng.next_stream().standard_exponential(len(path)) / (1.0 + eps)
    return KilledTrajectory(path, holds, killed=True)


def _backward_part(rng, eps, entry, grids: _BackwardGrids):
    # first event from the entry site, conditioned on never returning to A
    pk = eps / (1.0 + eps)
    q = 0.25 / (1.0 + eps)
    wts = [
        q * grids.h_at((entry[0] + dx, entry[1] + dy))
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1))
    ]
    total = pk + sum(wts)
    u = rng.next_stream().random() * total
    if u < pk:
        return KilledTrajectory(np.array([entry]), np.array([0.0]), killed=True)
    acc = pk
    d = 3
    for k, w in enumerate(wts):
        acc += w
        if u < acc:
            d = k
            break
    dx, dy = ((1, 0), (-1, 0), (0, 1), (0, -1))[d]
    start = (entry[0] + dx, entry[1] + dy)
    path, status = _core.sim_massive_htransform(
        rng.next_stream().bit_generator, start[0], start[1], grids.h_grid,
        grids.offset, grids.offset, eps, _max_steps(eps),
    )
    if status == _core.STATUS_LEFT_GRID:
        raise AccuracyError(
            "backward massive walk escaped its certified grid",
            achieved=grids.bound,
        )
    if status != _core.STATUS_KILLED:
        raise AccuracyError("massive backward part exceeded its step budget")
    sites = np.vstack([np.array([entry], dtype=np.int64), path])
    holds = np.concatenate(
        [[0.0], rng.next_stream().standard_exponential(len(path)) / (1.0 + eps)]
    )
    return KilledTrajectory(sites, holds, killed=True)


class MassiveSoupSampler:
    """Reusable sampler for the (eps, A) massive soup."""

    def __init__(self, eps, A, trunc_radius=None):
        if eps <= 0:
            raise DomainError("eps must be positive")
        self.eps = float(eps)
        self.A = as_point_set(A)
        self.equilibrium = massive_equilibrium(eps, self.A)
        self.rate_per_u = self.equilibrium.total
        self.grids = _BackwardGrids(eps, self.A, trunc_radius)

    def sample(self, rng, u) -> SoupSample:
        if u < 0:
            raise DomainError("u must be nonnegative")
        params = {"eps": self.eps, "A": self.A, "u": float(u),
                  "rate": u * self.rate_per_u}
        stream = rng.next_stream()
        count = int(stream.poisson(u * self.rate_per_u))
        labels = u * stream.random(count)
        idx = stream.choice(
            len(self.A), size=count,
            p=self.equilibrium.weights / self.equilibrium.total,
        )
        Aset = set(self.A)
        trajectories = []
        for i in range(count):
            entry = self.A[int(idx[i])]
            back = _backward_part(rng, self.eps, entry, self.grids)
            fwd = _forward_part(rng, self.eps, entry)
            assert not ({tuple(p) for p in back.sites[1:]} & Aset), \
                "massive backward part revisited A"
            trajectories.append(
                (BidirectionalTrajectory(back, entry, fwd), float(labels[i]))
            )
        return SoupSample(trajectories, params)

    def sample_pinned(self, rng, u) -> SoupSample:
        """Conditional soup given the origin vacant (thinning by deletion)."""
        if (0, 0) not in self.A:
            raise DomainError("pinning requires the origin to belong to A")
        raw = self.sample(rng, u)
        kept, dropped = [], 0
        for traj, label in raw.trajectories:
            if (0, 0) in traj.visited_set():
                dropped += 1
            else:
                kept.append((traj, label))
        params = dict(raw.params)
        params["n_dropped"] = dropped
        return SoupSample(kept, params)


def sample_massive_soup(rng, eps, A, u, trunc_radius=None) -> SoupSample:
    return MassiveSoupSampler(eps, A, trunc_radius).sample(rng, u)


def sample_massive_soup_pinned(rng, eps, A, u, trunc_radius=None) -> SoupSample:
    return MassiveSoupSampler(eps, A, trunc_radius).sample_pinned(rng, u)


def pinned_vacancy_exact(eps, A, u) -> float:
    """exp(-u (sum_x e_{eps,A}(x) - e_{eps,{0}}(0))): P[A vacant | 0 vacant]."""
    A = as_point_set(A)
    if (0, 0) not in A:
        raise DomainError("A must contain the origin")
    eA = massive_equilibrium(eps, A).total
    e0 = 1.0 / float(massive_green_many(eps, [(0, 0)], tol=GREEN_TOL)[0])
    return math.exp(-u * (eA - e0))


def pinned_vacancy_exponent(eps, A, u) -> float:
    """u (sum e_{eps,A} - e_{eps,{0}}(0)), the exponent in the pinned vacancy."""
    A = as_point_set(A)
    eA = massive_equilibrium(eps, A).total
    e0 = 1.0 / float(massive_green_many(eps, [(0, 0)], tol=GREEN_TOL)[0])
    return u * (eA - e0)
