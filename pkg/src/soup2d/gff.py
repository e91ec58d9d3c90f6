"""Gaussian fields: box, pinned-box, pinned infinite-volume and massive.

Covariances are assembled exactly from the potential-theory modules:

* box(N):           g_{B_N}(x, y)             (zero off B_N)
* pinned_box(N):    g_{B_N \\ {0}}(x, y)      (zero row at the origin)
* pinned_infinite:  a(x) + a(y) - a(y - x)
* massive(eps):     g_eps(x - y)

Sampling pins the zero-variance coordinates to exactly 0 and Cholesky-factors
the complement; an indefinite matrix beyond the 1e-10 relative tolerance is a
covariance assembly bug and raises NumericError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dirichlet import DirichletSolver, ball_solver, solver_for
from .errors import DomainError, NumericError
from .geometry import Domain, as_point, as_point_set, ball_points
from .potential import massive_green_many, potential_kernel_many

EIG_TOL = 1e-10
QUAD_TOL = 1e-10


@dataclass
class GaussianSpec:
    kind: tuple
    window: tuple
    covariance: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.covariance, dtype=float)
        if not np.allclose(c, c.T, atol=1e-12):
            raise NumericError("covariance must be symmetric")
        self.covariance = 0.5 * (c + c.T)
        w = scipy.linalg.eigvalsh(self.covariance)
        if w[0] < -EIG_TOL * max(w[-1], 1.0):
            raise NumericError(
                f"covariance indefinite: min eig {w[0]:.3e} vs max {w[-1]:.3e}"
            )

    def index(self, p):
        return self.window.index(as_point(p))

    def variance(self, p) -> float:
        i = self.index(p)
        return float(self.covariance[i, i])


def _pinned_box_solver(N: int) -> DirichletSolver:
    pts = [p for p in ball_points(N) if p != (0, 0)]
    return DirichletSolver(Domain(pts))


def build_spec(kind, window) -> GaussianSpec:
    """Assemble the covariance for a field kind over a finite window.

    kind: ("box", N) | ("pinned_box", N) | ("pinned_infinite",) | ("massive", eps)
    """
    window = as_point_set(window)
    n = len(window)
    kind = tuple(kind) if not isinstance(kind, str) else (kind,)
    name = kind[0]
    cov = np.zeros((n, n))
    if name == "box":
        solver = ball_solver(int(kind[1]))
        for j, y in enumerate(window):
            col = solver.green_column(y)
            for i, x in enumerate(window):
                cov[i, j] = (
                    col[solver.domain.index[x]] if x in solver.domain.index else 0.0
                )
    elif name == "pinned_box":
        solver = _pinned_box_solver(int(kind[1]))
        for j, y in enumerate(window):
            col = solver.green_column(y)
            for i, x in enumerate(window):
                cov[i, j] = (
                    col[solver.domain.index[x]] if x in solver.domain.index else 0.0
                )
    elif name == "pinned_infinite":
        avals = potential_kernel_many(window, tol=QUAD_TOL)
        diffs = potential_kernel_many(
            [(y[0] - x[0], y[1] - x[1]) for x in window for y in window],
            tol=QUAD_TOL,
        ).reshape(n, n)
        cov = avals[:, None] + avals[None, :] - diffs
    elif name == "massive":
        eps = float(kind[1])
        cov = massive_green_many(
            eps, [(y[0] - x[0], y[1] - x[1]) for x in window for y in window],
            tol=1e-12,
        ).reshape(n, n)
    else:
        raise DomainError(f"unknown Gaussian field kind {kind!r}")
    return GaussianSpec((name,) + tuple(kind[1:]), window, 0.5 * (cov + cov.T))


class FieldSampler:
    """Cholesky sampler with exact pinning of zero-variance coordinates."""

    def __init__(self, spec: GaussianSpec):
        self.spec = spec
        var = np.diag(spec.covariance)
        scale = max(float(var.max()), 1.0)
        self.active = np.where(var > EIG_TOL * scale)[0]
        sub = spec.covariance[np.ix_(self.active, self.active)]
        if self.active.size:
            try:
                self.chol = scipy.linalg.cholesky(sub, lower=True)
            except scipy.linalg.LinAlgError:
                w, v = scipy.linalg.eigh(sub)
                if w[0] < -EIG_TOL * max(w[-1], 1.0):
                    raise NumericError(
                        "covariance factorization failed beyond tolerance"
                    ) from None
                self.chol = v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
        else:
            self.chol = np.zeros((0, 0))

    def sample(self, rng, size=None) -> np.ndarray:
        """Centered Gaussian field(s) over spec.window; (size, n) when batched."""
        stream = rng.next_stream() if hasattr(rng, "next_stream") else rng
        m = 1 if size is None else int(size)
        z = stream.standard_normal((m, self.active.size))
        out = np.zeros((m, len(self.spec.window)))
        out[:, self.active] = z @ self.chol.T
        return out[0] if size is None else out


def sample_field(rng, spec: GaussianSpec, size=None) -> np.ndarray:
    return FieldSampler(spec).sample(rng, size)


class ConditionalShift:
    """The affine map Phi(h): field -> field + p (h - field_0).

    p_x is the probability of hitting the pin before the relevant killing:
    P_x[H_0 < T_{B_N}] for box fields, g_eps(x,0)/g_eps(0,0) for massive
    fields.  Phi(0) realizes the field conditioned to vanish at the origin.
    """

    def __init__(self, spec: GaussianSpec, h: float = 0.0):
        if (0, 0) not in spec.window:
            raise DomainError("conditional shift needs the origin in the window")
        self.spec = spec
        self.h = float(h)
        name = spec.kind[0]
        if name == "box":
            solver = ball_solver(int(spec.kind[1]))
            self.p = np.array(
                [1.0 - solver.avoid([(0, 0)], x) for x in spec.window]
            )
        elif name == "massive":
            eps = float(spec.kind[1])
            g = massive_green_many(eps, list(spec.window), tol=1e-12)
            g00 = float(massive_green_many(eps, [(0, 0)], tol=1e-12)[0])
            self.p = np.clip(g / g00, 0.0, 1.0)
        else:
            raise DomainError(f"conditional shift undefined for kind {spec.kind}")
        self.i0 = spec.index((0, 0))

    def apply(self, fields: np.ndarray) -> np.ndarray:
        fields = np.asarray(fields, dtype=float)
        phi0 = fields[..., self.i0]
        return fields + self.p * (self.h - phi0)[..., None]


class ConditionalShiftK:
    """Phi^K(h): condition a box field on its values over a finite set K."""

    def __init__(self, spec: GaussianSpec, K, boundary_values=None):
        K = as_point_set(K)
        if not set(K) <= set(spec.window):
            raise DomainError("K must be contained in the spec window")
        if spec.kind[0] == "box":
            solver = ball_solver(int(spec.kind[1]))
        else:
            raise DomainError("general-K conditioning implemented for box fields")
        H = solver.hitting_matrix(K)
        rows = []
        for x in spec.window:
            if x in solver.domain.index:
                rows.append(H[solver.domain.index[x]])
            else:
                rows.append(np.zeros(len(K)))
        self.weights = np.array(rows)          # (n, |K|)
        self.k_idx = [spec.index(p) for p in K]
        self.h = (
            np.zeros(len(K)) if boundary_values is None
            else np.asarray(boundary_values, dtype=float)
        )

    def apply(self, fields: np.ndarray) -> np.ndarray:
        fields = np.asarray(fields, dtype=float)
        phiK = fields[..., self.k_idx]
        return fields + (self.h - phiK) @ self.weights.T


def shift_function(kind, u_or_alpha, window) -> np.ndarray:
    """Deterministic shift fields h(.) of the pinned isomorphisms.

    kind: ("dirichlet", N) -> P_x[H_0 > T_{B_N}] sqrt(2u)
          ("general", K, Kp) -> P_x[H_K > T_{K'}] sqrt(2u)
          ("massive", eps)  -> P_x[H_0 >= xi(eps)] sqrt(2u)
          ("infinite",)     -> sqrt(2 alpha) a(x)
    """
    window = as_point_set(window)
    name = kind[0]
    if name == "dirichlet":
        solver = ball_solver(int(kind[1]))
        p = np.array([solver.avoid([(0, 0)], x) for x in window])
        return p * math.sqrt(2.0 * u_or_alpha)
    if name == "general":
        K = as_point_set(kind[1])
        solver = solver_for(kind[2])
        p = np.array([solver.avoid(K, x) for x in window])
        return p * math.sqrt(2.0 * u_or_alpha)
    if name == "massive":
        eps = float(kind[1])
        g = massive_green_many(eps, list(window), tol=1e-12)
        g00 = float(massive_green_many(eps, [(0, 0)], tol=1e-12)[0])
        return (1.0 - np.clip(g / g00, 0.0, 1.0)) * math.sqrt(2.0 * u_or_alpha)
    if name == "infinite":
        a = potential_kernel_many(window, tol=QUAD_TOL)
        return math.sqrt(2.0 * u_or_alpha) * a
    raise DomainError(f"unknown shift kind {kind!r}")
