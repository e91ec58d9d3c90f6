"""Finite-volume interlacement soup: Poisson counts, conditioned parts, occupation.

The soup attached to (K, K', A) consists of a Poisson(u * rho_A total) number
of bidirectional trajectories: entry points sampled from the normalized
intensity rho, backward parts conditioned to exit K' before returning to A,
forward parts conditioned to avoid K until exiting K'.  The conditioned laws
are realized by exact Doob h-transforms built from the Dirichlet solver.

An equivalent sampler drives a single excursion chain from a reference state
x_* outside K' and collects the excursions entering A, with whole-run
rejection implementing the conditional law given that K is never visited.

Hold-time convention: the holding time at the shared entry point belongs to
the forward part only; backward parts carry a zero hold at index 0.  This
keeps occupation fields a plain sum over parts with no double counting.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from . import _core
from .dirichlet import rho_measure, solver_for
from .errors import BudgetError, DomainError
from .geometry import Domain, as_point, as_point_set, neighbors
from .trajectories import (BidirectionalTrajectory, KilledTrajectory,
                           OccupationField, SoupSample)

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _default_max_steps(domain: Domain) -> int:
    return max(100_000, 400 * len(domain))


def _path_hits(path: np.ndarray, pts) -> bool:
    for (px, py) in pts:
        if (((path[:, 0] == px) & (path[:, 1] == py)).any()):
            return True
    return False


def _weighted_first_step(stream, x, weights):
    """First-step draw by cumulative scan, matching the kernel mapping."""
    total = float(sum(weights))
    if total <= 0.0:
        raise DomainError("conditioning on a null event: all step weights vanish")
    u = stream.random() * total
    acc = 0.0
    d = len(weights) - 1
    for k, wk in enumerate(weights):
        acc += wk
        if u < acc:
            d = k
            break
    return (x[0] + _STEPS[d][0], x[1] + _STEPS[d][1])


class DirichletSoupSampler:
    """Bound sampler for the (K, K', A) soup; reusable across replicas."""

    def __init__(self, K, Kp, A, max_steps=None):
        self.Kp = Kp if isinstance(Kp, Domain) else Domain(Kp)
        self.K = as_point_set(K)
        self.A = as_point_set(A)
        self.solver = solver_for(self.Kp)
        self.rho = rho_measure(self.K, self.Kp, self.A)
        self.max_steps = max_steps or _default_max_steps(self.Kp)
        self._fwd_grids = self.solver.padded_avoid_grid(self.K)
        self._bwd_grids = self.solver.padded_avoid_grid(self.A)
        gridA, _, ox, oy = self._bwd_grids
        self._bwd_nbr_weights = {
            x: [gridA[q[0] - ox, q[1] - oy] for q in neighbors(x)] for x in self.A
        }

    def forward(self, rng, x) -> KilledTrajectory:
        x = as_point(x)
        grid, mask, ox, oy = self._fwd_grids
        if x in self.K or x not in self.Kp.index:
            raise DomainError("forward part must start in K' off K")
        if grid[x[0] - ox, x[1] - oy] <= 0.0:
            raise DomainError(f"cannot condition on avoiding {self.K} from {x}")
        path, status = _core.sim_weighted_exit(
            rng.next_stream().bit_generator, x[0], x[1], grid, mask, ox, oy,
            self.max_steps,
        )
        if status != _core.STATUS_EXITED:
            raise BudgetError(f"forward walk exceeded {self.max_steps} steps")
        holds = rng.next_stream().standard_exponential(len(path))
        return KilledTrajectory(path, holds, killed=True)

    def backward(self, rng, x) -> KilledTrajectory:
        x = as_point(x)
        if x not in self.A:
            raise DomainError("backward part must start inside A")
        first = _weighted_first_step(
            rng.next_stream(), x, self._bwd_nbr_weights[x]
        )
        if first not in self.Kp.index:
            return KilledTrajectory(np.array([x]), np.array([0.0]), killed=True)
        grid, mask, ox, oy = self._bwd_grids
        path, status = _core.sim_weighted_exit(
            rng.next_stream().bit_generator, first[0], first[1], grid, mask,
            ox, oy, self.max_steps,
        )
        if status != _core.STATUS_EXITED:
            raise BudgetError(f"backward walk exceeded {self.max_steps} steps")
        sites = np.vstack([np.array([x], dtype=np.int64), path])
        holds = np.concatenate(
            [[0.0], rng.next_stream().standard_exponential(len(path))]
        )
        return KilledTrajectory(sites, holds, killed=True)

    def sample(self, rng, u) -> SoupSample:
        if u < 0:
            raise DomainError("u must be nonnegative")
        params = {"K": self.K, "Kp": self.Kp, "A": self.A, "u": float(u),
                  "rho_total": self.rho.total}
        if self.rho.total <= 0.0 or u == 0.0:
            return SoupSample([], params)
        stream = rng.next_stream()
        count = int(stream.poisson(u * self.rho.total))
        labels = u * stream.random(count)
        entry_idx = stream.choice(len(self.A), size=count,
                                  p=self.rho.weights / self.rho.total)
        trajectories = []
        for i in range(count):
            entry = self.A[int(entry_idx[i])]
            back = self.backward(rng, entry)
            fwd = self.forward(rng, entry)
            assert not _path_hits(fwd.sites, self.K), "forward part touched K"
            assert not _path_hits(back.sites[1:], self.A), \
                "backward part revisited A"
            trajectories.append(
                (BidirectionalTrajectory(back, entry, fwd), float(labels[i]))
            )
        return SoupSample(trajectories, params)


@lru_cache(maxsize=32)
def _cached_sampler(K, Kp, A) -> DirichletSoupSampler:
    return DirichletSoupSampler(K, Kp, A)


def soup_sampler(K, Kp, A) -> DirichletSoupSampler:
    Kp_dom = Kp if isinstance(Kp, Domain) else Domain(Kp)
    return _cached_sampler(as_point_set(K), Kp_dom, as_point_set(A))


def sample_conditioned_forward(rng, Kp, K, x, max_steps=None) -> KilledTrajectory:
    """Walk from x to the first exit of K', conditioned to avoid K.

    Exact h-transform with h(y) = P_y[H_K > T_{K'}]; one-step law
    h(z) / (4 h(y)).  Holding times are i.i.d. unit-rate exponentials.
    """
    x = as_point(x)
    A = as_point_set(tuple(as_point_set(K)) + (x,))
    if max_steps:
        return DirichletSoupSampler(K, Kp, A, max_steps=max_steps).forward(rng, x)
    return soup_sampler(K, Kp, A).forward(rng, x)


def sample_conditioned_backward(rng, Kp, A, x, max_steps=None) -> KilledTrajectory:
    """Walk from x in A to the first exit of K', conditioned not to return to A.

    First step weighted by h_A(y) = P_y[T_{K'} < H_A] over the neighbors of x,
    then the h_A-transformed walk off A.  The hold at the entry site is zero
    by the splice convention.
    """
    A = as_point_set(A)
    sampler = soup_sampler((), Kp, A)
    if max_steps:
        sampler = DirichletSoupSampler((), Kp, A, max_steps=max_steps)
    return sampler.backward(rng, x)


def sample_soup(rng, K, Kp, A, u, max_steps=None) -> SoupSample:
    """One realization of the (K, K', A) soup at level u."""
    sampler = soup_sampler(K, Kp, A)
    if max_steps:
        sampler = DirichletSoupSampler(K, Kp, A, max_steps=max_steps)
    return sampler.sample(rng, u)


def occupation_field(sample: SoupSample, window) -> OccupationField:
    """Cumulated holding times of all trajectory parts over the window."""
    window = as_point_set(window)
    times = np.zeros(len(window))
    for traj, _ in sample.trajectories:
        for part in traj.parts():
            sites, holds = part.sites, part.holds
            for j, (px, py) in enumerate(window):
                sel = (sites[:, 0] == px) & (sites[:, 1] == py)
                if sel.any():
                    times[j] += holds[sel].sum()
    return OccupationField(window, times)


def vacancy_probability(K, Kp, A, u) -> float:
    """P[soup leaves A untouched] = exp(-u * rho_A^{K,K'}(Z^2))."""
    if u < 0:
        raise DomainError("u must be nonnegative")
    return math.exp(-u * soup_sampler(K, Kp, A).rho.total)


class ExcursionEnsemble:
    """Forward-part ensemble produced by the excursion-chain sampler."""

    def __init__(self, trajectories, params, n_excursions, attempts):
        self.trajectories = trajectories
        self.params = params
        self.n_excursions = n_excursions    # raw excursion count of accepted run
        self.attempts = attempts

    def __len__(self):
        return len(self.trajectories)

    def entries(self):
        return [tuple(t.sites[0]) for t in self.trajectories]


class ExcursionChainSampler:
    """Single-chain sampler bound to (K, K', A)."""

    def __init__(self, K, Kp, A, max_steps=None):
        self.Kp = Kp if isinstance(Kp, Domain) else Domain(Kp)
        self.K = as_point_set(K)
        self.A = as_point_set(A)
        if not (set(self.K) < set(self.A)):
            raise DomainError("need K strictly contained in A")
        if not self.Kp.contains_set(self.A):
            raise DomainError("need A inside K'")
        self.boundary = self.Kp.interior_boundary()
        cstar = np.array(
            [sum(1 for q in neighbors(p) if q not in self.Kp.index)
             for p in self.boundary],
            dtype=float,
        )
        self.lambda_star = float(cstar.sum())
        self.entrance = cstar / self.lambda_star
        self.mask, self.ox, self.oy = self.Kp.mask_arrays()
        self.max_steps = max_steps or _default_max_steps(self.Kp)

    def sample(self, rng, u, max_attempts=1000) -> ExcursionEnsemble:
        if u < 0:
            raise DomainError("u must be nonnegative")
        params = {"K": self.K, "Kp": self.Kp, "A": self.A, "u": float(u),
                  "lambda_star": self.lambda_star}
        for attempt in range(1, max_attempts + 1):
            stream = rng.next_stream()
            n_exc = int(stream.poisson(u * self.lambda_star / 4.0))
            starts = stream.choice(len(self.boundary), size=n_exc,
                                   p=self.entrance)
            kept = []
            rejected = False
            for i in range(n_exc):
                sx, sy = self.boundary[int(starts[i])]
                path, status = _core.sim_srw_exit(
                    rng.next_stream().bit_generator, sx, sy, self.mask,
                    self.ox, self.oy, self.max_steps,
                )
                if status != _core.STATUS_EXITED:
                    raise BudgetError(
                        f"excursion exceeded {self.max_steps} steps"
                    )
                if self.K and _path_hits(path, self.K):
                    rejected = True
                    break
                inA = np.zeros(len(path), dtype=bool)
                for ax, ay in self.A:
                    inA |= (path[:, 0] == ax) & (path[:, 1] == ay)
                if inA.any():
                    kept.append(path[int(np.argmax(inA)):])
            if rejected:
                continue
            trajectories = []
            for clipped in kept:
                holds = rng.next_stream().standard_exponential(len(clipped))
                trajectories.append(KilledTrajectory(clipped, holds, killed=True))
            return ExcursionEnsemble(trajectories, params, n_exc, attempt)
        raise BudgetError(
            f"excursion sampler rejected {max_attempts} runs in a row",
            acceptance_estimate=1.0 / max_attempts,
        )


def sample_soup_via_excursions(rng, K, Kp, A, u, max_steps=None,
                               max_attempts=1000) -> ExcursionEnsemble:
    """Forward parts of the soup via the single excursion chain from x_*.

    Runs Poisson(u lambda_{x_*}/4) excursions from the boundary entrance law,
    keeps the post-H_A parts of those entering A, and rejects whole runs in
    which any excursion visits K (the conditional law given K untouched).
    """
    key = (as_point_set(K), Kp if isinstance(Kp, Domain) else Domain(Kp),
           as_point_set(A))
    sampler = _cached_excursion(*key) if not max_steps else \
        ExcursionChainSampler(*key, max_steps=max_steps)
    return sampler.sample(rng, u, max_attempts=max_attempts)


@lru_cache(maxsize=32)
def _cached_excursion(K, Kp, A) -> ExcursionChainSampler:
    return ExcursionChainSampler(K, Kp, A)
