"""Lattice geometry: points, finite domains, set-file parsing.

Points on the square lattice are plain ``(x1, x2)`` integer tuples; finite
collections of them are canonicalized to sorted tuples so they can key caches.
The two domain kinds used throughout are Euclidean balls ``B_N = {|x| <= N}``
and explicit vertex sets.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def as_point(p) -> tuple[int, int]:
    x, y = p
    return (int(x), int(y))


def as_point_set(points) -> tuple[tuple[int, int], ...]:
    """Canonical sorted tuple of distinct lattice points."""
    return tuple(sorted({as_point(p) for p in points}))


def neighbors(p):
    x, y = p
    return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))


def ball_points(radius: int) -> tuple[tuple[int, int], ...]:
    """All lattice points with Euclidean norm <= radius."""
    r = int(radius)
    if r < 0:
        raise DomainError(f"ball radius must be >= 0, got {radius}")
    pts = []
    for x in range(-r, r + 1):
        ymax = int(np.floor(np.sqrt(r * r - x * x)))
        pts.extend((x, y) for y in range(-ymax, ymax + 1))
    return tuple(sorted(pts))


class Domain:
    """A finite vertex set with membership, indexing and boundary queries.

    kind is ``("euclidean_ball", N)`` or ``("explicit_set",)``.
    """

    def __init__(self, points, kind=("explicit_set",)):
        self.points = as_point_set(points)
        if not self.points:
            raise DomainError("domain must be nonempty")
        self.kind = kind
        self.index = {p: i for i, p in enumerate(self.points)}
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        self.bbox = (min(xs), max(xs), min(ys), max(ys))

    @classmethod
    def ball(cls, radius: int) -> "Domain":
        return cls(ball_points(radius), kind=("euclidean_ball", int(radius)))

    def __len__(self):
        return len(self.points)

    def __contains__(self, p):
        return as_point(p) in self.index

    def __eq__(self, other):
        return isinstance(other, Domain) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def __repr__(self):
        if self.kind[0] == "euclidean_ball":
            return f"Domain.ball({self.kind[1]})"
        return f"Domain(<{len(self.points)} points>)"

    def contains_set(self, pts) -> bool:
        return all(p in self.index for p in map(as_point, pts))

    def interior_boundary(self):
        """Points of the domain with at least one neighbor outside."""
        return tuple(
            p for p in self.points if any(q not in self.index for q in neighbors(p))
        )

    def exterior_boundary(self):
        """Points outside the domain adjacent to it."""
        out = set()
        for p in self.points:
            for q in neighbors(p):
                if q not in self.index:
                    out.add(q)
        return tuple(sorted(out))

    def boundary_edge_count(self) -> int:
        """Number of (domain, exterior) neighbor pairs."""
        return sum(
            1 for p in self.points for q in neighbors(p) if q not in self.index
        )

    def mask_arrays(self):
        """(mask, ox, oy): uint8 membership grid over the bounding box."""
        x0, x1, y0, y1 = self.bbox
        mask = np.zeros((x1 - x0 + 1, y1 - y0 + 1), dtype=np.uint8)
        for (x, y) in self.points:
            mask[x - x0, y - y0] = 1
        return mask, x0, y0


def parse_set_file(path) -> tuple[tuple[int, int], ...]:
    """Read a point set: one ``x y`` integer pair per line.

    Blank lines are allowed; anything else malformed raises DomainError
    naming the offending line.
    """
    pts = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise DomainError(
                    f"{path}:{lineno}: expected 'x y' integer pair, got {line.strip()!r}"
                )
            try:
                pts.append((int(tokens[0]), int(tokens[1])))
            except ValueError:
                raise DomainError(
                    f"{path}:{lineno}: non-integer coordinate in {line.strip()!r}"
                ) from None
    if not pts:
        raise DomainError(f"{path}: empty point set")
    return as_point_set(pts)
