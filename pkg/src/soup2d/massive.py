"""Potential theory under exponential killing at rate eps.

Two computation routes coexist:

* an exact infinite-volume route: the massive Green function g_eps is known
  to quadrature accuracy, so hitting probabilities and equilibrium measures
  of a finite set A solve the small dense system
  sum_y g_eps(x,y) e(y) = P_x[H_A < xi] (= 1 on A), with no spatial
  truncation at all;
* the truncated-lattice route of the module contract: an absorbing box with
  a certified truncation bound assembled from survival-to-boundary
  probabilities and far-field Green bounds.

The exact route backs the N-schedule computations (the canonical
eps_N = 1/t_N is far too small for any reasonable absorbing box), while the
lattice route provides the independent cross-check required by the
last-exit identity tests.

Note on normalization: the equilibrium measure implemented here is the
density e_{eps,A}(x) = eps + (1/4) sum_{w~x} P_w[H_A > xi] on A, i.e. the
escape probability weighted by the total event rate (1+eps) of the killed
walk.  This is the unique measure satisfying the last-exit decomposition
P_z[H_A < xi] = sum_y g_eps(z,y) e(y) with the time-normalized Green
function, and it reduces to the escape probability as eps -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AccuracyError, DomainError, NumericError
from .geometry import as_point, as_point_set, neighbors
from .potential import massive_green_far_bound, massive_green_many

GREEN_TOL = 1e-12


@dataclass(frozen=True)
class MassiveRegime:
    """Canonical (N, eps) schedule: eps_N = 1/t_N with t_N = (2/pi) N^2 log^2 N."""

    N: int
    eps: float
    t_N: float

    @classmethod
    def canonical(cls, N: int) -> "MassiveRegime":
        t_N = (2.0 / math.pi) * N * N * math.log(N) ** 2
        return cls(N=int(N), eps=1.0 / t_N, t_N=t_N)

    def __post_init__(self):
        if not (0.5 <= self.eps * self.t_N <= 2.0):
            raise DomainError("eps is not within a factor 2 of the canonical 1/t_N")


def _green_matrix(eps, A, tol=GREEN_TOL):
    A = as_point_set(A)
    n = len(A)
    pairs = [(s[0] - t[0], s[1] - t[1]) for s in A for t in A]
    G = massive_green_many(eps, pairs, tol=tol).reshape(n, n)
    return A, 0.5 * (G + G.T)


@lru_cache(maxsize=64)
def _green_matrix_cached(eps, A):
    return _green_matrix(eps, A)[1]


def massive_equilibrium(eps, A, trunc_radius=None, method="green",
                        bound_tol=1e-6):
    """Massive equilibrium measure e_{eps,A} (see module note on normalization).

    method="green" solves the exact last-exit system and needs no truncation;
    method="lattice" derives e from a truncated hitting-probability solve and
    raises AccuracyError when the certified bound exceeds ``bound_tol``.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    A = as_point_set(A)
    if not A:
        raise DomainError("equilibrium measure of the empty set")
    from .dirichlet import MeasureOnSet

    if method == "green":
        G = _green_matrix_cached(float(eps), A)
        try:
            e = scipy.linalg.solve(G, np.ones(len(A)), assume_a="pos")
        except scipy.linalg.LinAlgError as exc:
            raise NumericError("massive Green matrix not positive definite") from exc
        return MeasureOnSet(A, e)
    if method != "lattice":
        raise DomainError(f"unknown method {method!r}")
    solve = _truncated_solver(eps, A, trunc_radius)
    w = np.zeros(len(A))
    errs = np.zeros(len(A))
    for i, x in enumerate(A):
        acc = eps
        for nbr in neighbors(x):
            if nbr in A:
                continue
            val, bound = solve.hit(nbr)
            acc += 0.25 * (1.0 - val)
            errs[i] += 0.25 * bound
        w[i] = acc
    if errs.max() > bound_tol:
        raise AccuracyError(
            "massive equilibrium truncation bound too large",
            achieved=float(errs.max()), requested=bound_tol,
        )
    return MeasureOnSet(A, w)


def massive_hit_probability_exact(eps, A, x, tol=GREEN_TOL) -> float:
    """P_x[H_A < xi(eps)] through the exact Green-matrix route."""
    A = as_point_set(A)
    x = as_point(x)
    if x in A:
        return 1.0
    from .dirichlet import MeasureOnSet  # noqa: F401  (same measure conventions)

    G = _green_matrix_cached(float(eps), A)
    e = scipy.linalg.solve(G, np.ones(len(A)), assume_a="pos")
    g_row = massive_green_many(
        eps, [(x[0] - y[0], x[1] - y[1]) for y in A], tol=tol
    )
    return float(np.clip(np.dot(g_row, e), 0.0, 1.0))


class _truncated_solver:
    """Killed-walk hitting solve on an absorbing box, with certified bound."""

    def __init__(self, eps, A, radius):
        self.eps = float(eps)
        self.A = as_point_set(A)
        if radius is None:
            radius = default_trunc_radius(eps, self.A)
        self.radius = int(radius)
        r = self.radius
        span = 2 * r + 1
        coords = [
            (x, y)
            for x in range(-r, r + 1)
            for y in range(-r, r + 1)
            if (x, y) not in self.A
        ]
        self.index = {p: i for i, p in enumerate(coords)}
        self.coords = coords
        n = len(coords)
        rows, cols, data = [], [], []
        rhs_hit = np.zeros(n)
        self._ext_rows = []
        w = 0.25 / (1.0 + self.eps)
        for i, p in enumerate(coords):
            for q in neighbors(p):
                if q in self.A:
                    rhs_hit[i] += w
                elif max(abs(q[0]), abs(q[1])) > r:
                    self._ext_rows.append(i)
                else:
                    rows.append(i)
                    cols.append(self.index[q])
                    data.append(w)
        P = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
        self.op = (sp.identity(n, format="csr") - P).tocsr()
        self.rhs_hit = rhs_hit
        self._hit_field = None
        self._surv_field = None
        # far-field bound: from just outside the box, the chance of ever
        # reaching A before the exponential clock rings
        g00 = float(massive_green_many(self.eps, [(0, 0)])[0])
        dmin = max(
            min(
                math.sqrt((r + 1 - abs(y[0])) ** 2) if abs(y[1]) <= r else 0.0
                for y in self.A
            ),
            1.0,
        )
        # distance from any exterior point of the box to any y in A
        dmin = min(
            (r + 1) - max(abs(y[0]), abs(y[1])) for y in self.A
        )
        self.far_hit_bound = min(
            1.0,
            len(self.A) * massive_green_far_bound(self.eps, max(dmin, 1)) / g00,
        )

    def _solve(self, rhs):
        n = self.op.shape[0]
        if n <= 2000:
            return scipy.linalg.solve(self.op.toarray(), rhs)
        try:
            import pyamg

            M = pyamg.ruge_stuben_solver(self.op).aspreconditioner(cycle="V")
        except Exception:
            M = None
        x, info = spla.cg(self.op, rhs, rtol=1e-12, atol=0.0, maxiter=20 * n, M=M)
        if info != 0:
            raise NumericError(f"massive CG failed (info={info})")
        return x

    def hit_field(self):
        if self._hit_field is None:
            self._hit_field = self._solve(self.rhs_hit)
        return self._hit_field

    def survival_field(self):
        """P_.[reach outside the box before xi and before H_A]."""
        if self._surv_field is None:
            rhs = np.zeros(self.op.shape[0])
            w = 0.25 / (1.0 + self.eps)
            for i in self._ext_rows:
                rhs[i] += w
            self._surv_field = self._solve(rhs)
        return self._surv_field

    def hit(self, x):
        """(lower-bound value, truncation bound) for P_x[H_A < xi]."""
        x = as_point(x)
        if x in self.A:
            return 1.0, 0.0
        if max(abs(x[0]), abs(x[1])) > self.radius:
            raise DomainError("start point outside the truncation box")
        i = self.index[x]
        val = float(self.hit_field()[i])
        bound = float(self.survival_field()[i]) * self.far_hit_bound
        return min(max(val, 0.0), 1.0), bound


def default_trunc_radius(eps, A) -> int:
    """Box radius making the certified truncation bound ~1e-7 at rate eps."""
    diam = max((max(abs(p[0]), abs(p[1])) for p in as_point_set(A)), default=0)
    # out-and-back cost ~ exp(-2 R sqrt(2 eps)); aim the exponent at 18
    r = int(math.ceil(9.0 / math.sqrt(2.0 * eps)))
    return max(r, 16) + diam


def massive_hit_probability(eps, A, x, trunc_radius=None, bound_tol=1e-6,
                            full=False):
    """P_x[H_A < xi(eps)] by a truncated absorbing-box solve.

    Raises AccuracyError when the certified truncation bound exceeds
    ``bound_tol``; with ``full=True`` returns (value, bound).
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    A = as_point_set(A)
    if not A:
        raise DomainError("empty target set")
    solve = _truncated_solver(eps, A, trunc_radius)
    val, bound = solve.hit(x)
    if bound > bound_tol:
        raise AccuracyError(
            "massive hit probability truncation bound too large",
            achieved=bound, requested=bound_tol,
        )
    return (val, bound) if full else val


def capacity_massive(A, N: int) -> float:
    """(2 log N / pi)^2 sum_x e_{eps_N,A}(x) P_{eps_N,x}[H_0 = infinity].

    The canonical schedule eps_N = 1/t_N is used; converges to cap(A).
    """
    A = as_point_set(A)
    if (0, 0) not in A:
        raise DomainError("A must contain the origin (anchor y = 0)")
    regime = MassiveRegime.canonical(N)
    eps = regime.eps
    e = massive_equilibrium(eps, A)
    g_row = massive_green_many(eps, [y for y in A], tol=GREEN_TOL)
    g00 = float(massive_green_many(eps, [(0, 0)], tol=GREEN_TOL)[0])
    escape = 1.0 - np.clip(g_row / g00, 0.0, 1.0)
    scale = (2.0 * math.log(N) / math.pi) ** 2
    return float(scale * np.dot(e.weights, escape))


def capacity_massive_exponent(A, N: int) -> float:
    """(2 log N / pi) sum_x (g(0,0) - g(0,x)) e_{eps_N,A}(x) -> cap(A)."""
    A = as_point_set(A)
    regime = MassiveRegime.canonical(N)
    eps = regime.eps
    e = massive_equilibrium(eps, A)
    g_row = massive_green_many(eps, [y for y in A], tol=GREEN_TOL)
    g00 = float(massive_green_many(eps, [(0, 0)], tol=GREEN_TOL)[0])
    return float((2.0 * math.log(N) / math.pi) * np.dot(g00 - g_row, e.weights))
