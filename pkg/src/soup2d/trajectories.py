"""Trajectory and sample containers shared by the soup samplers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import as_point, as_point_set


@dataclass
class KilledTrajectory:
    """A finite walk path with holding times.

    ``sites`` lists the sites where time is spent, in visit order (the exit
    site of a Dirichlet-killed walk is not recorded: no time accrues there).
    ``holds`` are the holding times; they are positive exponentials except
    for the entry-site hold of a backward part, which is zero by the
    splice convention (the shared entry hold belongs to the forward part).
    """

    sites: np.ndarray
    holds: np.ndarray
    killed: bool = True

    def __post_init__(self):
        self.sites = np.asarray(self.sites, dtype=np.int64).reshape(-1, 2)
        self.holds = np.asarray(self.holds, dtype=float)
        if self.sites.shape[0] != self.holds.shape[0]:
            raise ValueError("need one holding time per site")
        if self.sites.shape[0] > 1:
            d = np.abs(np.diff(self.sites, axis=0)).sum(axis=1)
            if (d != 1).any():
                raise ValueError("consecutive sites must be lattice neighbors")

    def __len__(self):
        return self.sites.shape[0]

    def visits(self, p) -> int:
        p = as_point(p)
        return int(((self.sites[:, 0] == p[0]) & (self.sites[:, 1] == p[1])).sum())

    def visited_set(self):
        return {(int(x), int(y)) for x, y in self.sites}

    def total_time(self) -> float:
        return float(self.holds.sum())

    def time_at(self, p) -> float:
        p = as_point(p)
        sel = (self.sites[:, 0] == p[0]) & (self.sites[:, 1] == p[1])
        return float(self.holds[sel].sum())


@dataclass
class BidirectionalTrajectory:
    backward: KilledTrajectory
    entry: tuple
    forward: KilledTrajectory

    def __post_init__(self):
        self.entry = as_point(self.entry)
        for part in (self.backward, self.forward):
            if len(part) and tuple(part.sites[0]) != self.entry:
                raise ValueError("both parts must start at the entry point")

    def parts(self):
        return (self.backward, self.forward)

    def visited_set(self):
        return self.backward.visited_set() | self.forward.visited_set()

    def time_at(self, p) -> float:
        return self.backward.time_at(p) + self.forward.time_at(p)


@dataclass
class SoupSample:
    """Realization of a Poisson soup: labeled bidirectional trajectories."""

    trajectories: list
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.trajectories)

    def entries(self):
        return [traj.entry for traj, _ in self.trajectories]

    def visited_set(self):
        out = set()
        for traj, _ in self.trajectories:
            out |= traj.visited_set()
        return out

    def hits(self, pts) -> bool:
        pts = set(as_point_set(pts))
        return bool(self.visited_set() & pts)


@dataclass
class OccupationField:
    window: tuple
    times: np.ndarray

    def __post_init__(self):
        self.window = as_point_set(self.window)
        self.times = np.asarray(self.times, dtype=float)

    def __getitem__(self, p):
        p = as_point(p)
        for q, t in zip(self.window, self.times):
            if q == p:
                return float(t)
        return 0.0

    def as_dict(self):
        return {p: float(t) for p, t in zip(self.window, self.times)}

    def support(self):
        return tuple(p for p, t in zip(self.window, self.times) if t > 0)
