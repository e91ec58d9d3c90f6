"""Verification harness: exact oracles, hypothesis tests, theorem-level drivers.

Every driver returns an ExperimentReport whose verdict combines z-scores of
Monte Carlo estimates against exact targets (threshold 3 unless stated),
chi-square p-values at the 1% level, and explicit boolean checks (monotone
convergence and the like).  Wherever an exact solve exists, Monte Carlo is
tested against it; two Monte Carlo runs are compared only when no oracle
exists (isomorphism second moments).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import stats
from ._core import STATUS_KILLED, sim_torus_cover
from .dirichlet import (ball_solver, capacity_exact, capacity_finite_N,
                        equilibrium_measure, rho_measure, solver_for)
from .errors import BudgetError, DomainError
from .gff import (ConditionalShiftK, FieldSampler, GaussianSpec, build_spec,
                  shift_function)
from .geometry import Domain, as_point_set, ball_points
from .massive import MassiveRegime, capacity_massive
from .potential import potential_kernel_many
from .soup_dirichlet import (occupation_field, sample_soup,
                             sample_soup_via_excursions, vacancy_probability)
from .soup_massive import pinned_vacancy_exponent
from .soup_tilted import TiltedOccupationSampler
from .streams import StreamFactory
from .trajectories import SoupSample

Z_THRESHOLD = 3.0
P_LEVEL = 0.01


@dataclass
class StatLine:
    probe: str
    estimate: float
    stderr: float
    target: float
    z: float

    def as_dict(self):
        return {
            "probe": self.probe,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "exact_or_target": self.target,
            "z_score": self.z,
        }


@dataclass
class ExperimentReport:
    name: str
    statistics: list = field(default_factory=list)
    checks: list = field(default_factory=list)       # (label, bool) pairs
    z_threshold: float = Z_THRESHOLD
    seed: int = 0
    replicas: int = 0
    runtime_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def add_stat(self, probe, estimate, stderr, target, z=None):
        if z is None:
            z = 0.0 if estimate == target else (
                (estimate - target) / stderr if stderr > 0 else float("inf")
            )
        self.statistics.append(
            StatLine(str(probe), float(estimate), float(stderr), float(target),
                     float(z))
        )

    def add_check(self, label, ok):
        self.checks.append((str(label), bool(ok)))

    @property
    def verdict(self) -> bool:
        zs_ok = all(abs(s.z) <= self.z_threshold for s in self.statistics)
        return zs_ok and all(ok for _, ok in self.checks)

    def as_dict(self):
        return {
            "name": self.name,
            "verdict": "pass" if self.verdict else "fail",
            "z_threshold": self.z_threshold,
            "seed": self.seed,
            "replicas": self.replicas,
            "runtime_s": round(self.runtime_s, 3),
            "statistics": [s.as_dict() for s in self.statistics],
            "checks": [{"label": l, "ok": ok} for l, ok in self.checks],
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.verdict else 'FAIL'}] {self.name} "
                 f"(replicas={self.replicas}, seed={self.seed}, "
                 f"{self.runtime_s:.1f}s)"]
        for s in self.statistics:
            lines.append(
                f"  {s.probe}: {s.estimate:.6g} +- {s.stderr:.2g} "
                f"(target {s.target:.6g}, z={s.z:+.2f})"
            )
        for label, ok in self.checks:
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {label}")
        return "\n".join(lines)


def replicated_rows(fn, replicas, threads=1):
    """fn(replica_index) -> 1-d array; rows stacked in replica order.

    Replica streams are keyed by index, so the result is identical for any
    thread count.
    """
    if threads <= 1:
        return np.vstack([np.atleast_1d(fn(i)) for i in range(replicas)])
    chunk = max(64, replicas // (8 * threads) + 1)
    ranges = [(s, min(s + chunk, replicas)) for s in range(0, replicas, chunk)]

    def run_range(bounds):
        lo, hi = bounds
        return np.vstack([np.atleast_1d(fn(i)) for i in range(lo, hi)])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(run_range, ranges))
    return np.vstack(parts)


# ---------------------------------------------------------------------------
# exact Feynman-Kac Laplace transform
# ---------------------------------------------------------------------------

def laplace_exact(V: dict, K, Kp, A, u) -> float:
    """E[exp(-sum_x V(x) L_{x,u})] for the (K, K') soup, exactly.

    V is a nonnegative potential supported inside A.  The inner expectation
    solves the Feynman-Kac system w(x) = (1/(1+V(x))) (1/4) sum_nbrs w with
    w = 0 on K and w = 1 outside K'; the exponent is
    u sum_x e_{A,K'}(x) (P_x[H_K > T_{K'}] - w(x)).
    """
    Kp_dom = Kp if isinstance(Kp, Domain) else Domain(Kp)
    K = as_point_set(K)
    A = as_point_set(A)
    if any(v < 0 for v in V.values()):
        raise DomainError("potential V must be nonnegative")
    supp = as_point_set([p for p, v in V.items() if v > 0]) if V else ()
    if not set(supp) <= set(A):
        raise DomainError("supp(V) must be contained in A")
    if u < 0:
        raise DomainError("u must be nonnegative")
    solver = solver_for(Kp_dom)
    n = solver.n
    keep = np.ones(n, dtype=bool)
    for p in K:
        keep[solver.domain.index[p]] = False
    vdiag = np.zeros(n)
    for p, v in V.items():
        if p in solver.domain.index:
            vdiag[solver.domain.index[p]] = float(v)
    d = 1.0 / (1.0 + vdiag[keep])                  # FK per-site weight
    P_sub = (sp.identity(keep.sum(), format="csr")
             - solver.operator[keep][:, keep].tocsr())
    b = 0.25 * solver.exterior_neighbor_count[keep]
    # (I - D P) w = D b, symmetrized by w = S y with S = sqrt(D):
    # (I - S P S) y = S b
    s = np.sqrt(d)
    Ssp = sp.diags(s)
    A_sys = sp.identity(keep.sum(), format="csr") - Ssp @ P_sub @ Ssp
    rhs = s * b
    if keep.sum() <= 2000:
        y = scipy.linalg.solve(A_sys.toarray(), rhs)
    else:
        M = solver._preconditioner(A_sys.tocsr())
        y, info = spla.cg(A_sys.tocsr(), rhs, rtol=1e-12, atol=0.0,
                          maxiter=20 * int(keep.sum()), M=M)
        if info != 0:
            raise BudgetError(f"Feynman-Kac CG failed (info={info})")
    w = np.zeros(n)
    w[keep] = s * y
    e = equilibrium_measure(solver, A)
    hK = np.array([solver.avoid(K, x) for x in A])
    wA = np.array(
        [w[solver.domain.index[x]] if x not in K else 0.0 for x in A]
    )
    exponent = u * float(np.dot(e.weights, hK - wA))
    return math.exp(-exponent)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------

def _richardson_errors(values, Ns):
    """First-order error estimates |c|/log N from consecutive differences."""
    est = {}
    for (N1, v1), (N2, v2) in zip(list(zip(Ns, values))[:-1],
                                  list(zip(Ns, values))[1:]):
        c = (v1 - v2) / (1.0 / math.log(N1) - 1.0 / math.log(N2))
        est[N2] = abs(c) / math.log(N2)
        est.setdefault(N1, abs(c) / math.log(N1))
    return est


def verify_capacity_convergence(sets=None, N_grid=(64, 128, 256),
                                massive_grid=None, seed=0, threads=1,
                                **_ignored) -> ExperimentReport:
    """Finite-N and massive capacity representations against exact targets."""
    t0 = time.time()
    if sets is None:
        sets = [((0, 0), (1, 0)), ((0, 0),),
                ((0, 0), (1, 0), (0, 1), (1, 1))]
    massive_grid = tuple(massive_grid or N_grid[:3])
    rep = ExperimentReport("capacity-convergence", seed=seed)
    for A in sets:
        A = as_point_set(A)
        target = capacity_exact(A)
        vals = [capacity_finite_N(A, N).value for N in N_grid]
        errs = [abs(v - target) for v in vals]
        est_d = _richardson_errors(vals, N_grid)
        for N, v in zip(N_grid, vals):
            rep.add_stat(f"cap_finite{A}@N={N}", v, 0.0, target, z=0.0)
        label = f"dirichlet errors decreasing for {A}"
        if len(A) == 1:
            rep.add_check(label, all(e < 1e-12 for e in errs))
        else:
            rep.add_check(label, all(b < a for a, b in zip(errs, errs[1:])))
        mvals = [capacity_massive(A, N) for N in massive_grid]
        merrs = [abs(v - target) for v in mvals]
        est_m = _richardson_errors(mvals, massive_grid)
        for N, v in zip(massive_grid, mvals):
            rep.add_stat(f"cap_massive{A}@N={N}", v, 0.0, target, z=0.0)
        label = f"massive errors decreasing for {A}"
        if len(A) == 1:
            rep.add_check(label, all(e < 1e-12 for e in merrs))
        else:
            rep.add_check(label, all(b < a for a, b in zip(merrs, merrs[1:])))
        if len(A) > 1:
            for N in massive_grid:
                if N in est_d and N in est_m:
                    vd = vals[list(N_grid).index(N)]
                    vm = mvals[list(massive_grid).index(N)]
                    ok = abs(vd - vm) <= est_d[N] + est_m[N]
                    rep.add_check(
                        f"dirichlet/massive agree at N={N} for {A} "
                        f"(|{vd:.4f}-{vm:.4f}| <= {est_d[N] + est_m[N]:.4f})",
                        ok,
                    )
    rep.runtime_s = time.time() - t0
    rep.extra["N_grid"] = list(N_grid)
    return rep


def verify_vacancy(configs=None, replicas=100_000, seed=0, threads=1,
                   **_ignored) -> ExperimentReport:
    """Empirical vacancy of sampled soups against exp(-u rho(A))."""
    t0 = time.time()
    if configs is None:
        configs = [
            {"K": [(0, 0)], "N": 1, "A": [(0, 0), (1, 0)], "u": 1.0},
            {"K": [(0, 0)], "N": 8, "A": [(0, 0), (1, 0), (0, 1)], "u": 2.0},
            {"K": [], "N": 4, "A": [(0, 0)], "u": 0.7},
        ]
    rep = ExperimentReport("vacancy-exact", seed=seed, replicas=replicas)
    fac = StreamFactory(seed)
    for ci, cfg in enumerate(configs):
        Kp = Domain.ball(cfg["N"])
        K, A, u = cfg["K"], cfg["A"], cfg["u"]
        exact = vacancy_probability(K, Kp, A, u)

        def one(i, K=K, Kp=Kp, A=A, u=u, ci=ci):
            s = sample_soup(fac.replica(ci, i), K, Kp, A, u)
            return np.array([1.0 if len(s) == 0 else 0.0])

        rows = replicated_rows(one, replicas, threads)
        p_hat, se, z = stats.binomial_z(rows.sum(), replicas, exact)
        rep.add_stat(f"vacancy K={K} A={A} N={cfg['N']} u={u}",
                     p_hat, se, exact, z)
    rep.runtime_s = time.time() - t0
    return rep


def verify_sampler_equivalence(N=8, u=None, replicas=100_000, seed=0,
                               threads=1, **_ignored) -> ExperimentReport:
    """Excursion-chain sampler against the direct Poisson sampler (B_N)."""
    t0 = time.time()
    Kp = Domain.ball(N)
    lam_star = float(Kp.boundary_edge_count())
    if u is None:
        u = 12.0 / lam_star          # raw excursion rate ~ 3
    A = as_point_set([(0, 0), (1, 0), (0, 1), (-1, 0)])
    K = ((0, 0),)
    rep = ExperimentReport("sampler-equivalence", seed=seed, replicas=replicas)
    fac = StreamFactory(seed)

    # (a) raw excursion count ~ Poisson(u lambda_* / 4), no conditioning
    def count_one(i):
        ens = sample_soup_via_excursions(fac.replica(0, i), (), Kp, A, u)
        return np.array([ens.n_excursions])

    counts = replicated_rows(count_one, replicas, threads).ravel().astype(int)
    rate = u * lam_star / 4.0
    p_count = stats.poisson_gof_pvalue(counts, rate)
    rep.add_check(
        f"excursion count ~ Poisson({rate:.3f}): chi2 p={p_count:.4f} >= {P_LEVEL}",
        p_count >= P_LEVEL,
    )
    m, se = stats.mean_stderr(counts)
    rep.add_stat("raw excursion count mean", m, se, rate)

    # (b) A-entering ensembles with K={0}: entry histograms + kept counts
    entry_idx = {p: i for i, p in enumerate(A)}

    def exc_one(i):
        ens = sample_soup_via_excursions(fac.replica(1, i), K, Kp, A, u)
        row = np.zeros(len(A) + 1)
        for e in ens.entries():
            row[entry_idx[e]] += 1
        row[-1] = len(ens)
        return row

    def direct_one(i):
        s = sample_soup(fac.replica(2, i), K, Kp, A, u)
        row = np.zeros(len(A) + 1)
        for e in s.entries():
            row[entry_idx[e]] += 1
        row[-1] = len(s)
        return row

    exc = replicated_rows(exc_one, replicas, threads)
    direct = replicated_rows(direct_one, replicas, threads)
    p_hist = stats.two_sample_hist_pvalue(exc[:, :-1].sum(0),
                                          direct[:, :-1].sum(0))
    rep.add_check(
        f"entry histograms agree: chi2 p={p_hist:.4f} >= {P_LEVEL}",
        p_hist >= P_LEVEL,
    )
    rho = rho_measure(K, Kp, A)
    p_exc = stats.poisson_gof_pvalue(exc[:, -1].astype(int), u * rho.total)
    p_dir = stats.poisson_gof_pvalue(direct[:, -1].astype(int), u * rho.total)
    rep.add_check(
        f"excursion kept count ~ Poisson(u rho): p={p_exc:.4f}", p_exc >= P_LEVEL
    )
    rep.add_check(
        f"direct count ~ Poisson(u rho): p={p_dir:.4f}", p_dir >= P_LEVEL
    )
    rep.extra.update({"lambda_star": lam_star, "u": u,
                      "rho_total": rho.total})
    rep.runtime_s = time.time() - t0
    return rep


def verify_laplace(N=64, u=5.0, V=None, replicas=100_000, seed=0, threads=1,
                   **_ignored) -> ExperimentReport:
    """Empirical E[exp(-sum V L)] against the exact Feynman-Kac value."""
    t0 = time.time()
    if V is None:
        V = {(1, 0): 0.7, (0, 1): 0.4, (-1, -1): 1.1, (2, 2): 0.25,
             (0, -2): 0.5}
    K = ((0, 0),)
    Kp = Domain.ball(N)
    A = as_point_set(list(V) + [(0, 0)])
    exact = laplace_exact(V, K, Kp, A, u)
    fac = StreamFactory(seed)
    vpts = as_point_set(list(V))
    vvals = np.array([V[p] for p in vpts])

    def one(i):
        s = sample_soup(fac.replica(0, i), K, Kp, A, u)
        occ = occupation_field(s, vpts)
        return np.array([math.exp(-float(np.dot(vvals, occ.times)))])

    rows = replicated_rows(one, replicas, threads).ravel()
    est, se, z = stats.z_against(rows, exact)
    rep = ExperimentReport("laplace", seed=seed, replicas=replicas)
    rep.add_stat(f"E[exp(-V.L)] N={N} u={u}", est, se, exact, z)
    rep.add_check("V -> infinity limit equals vacancy",
                  abs(laplace_exact({p: 1e6 for p in A}, K, Kp, A, u)
                      - vacancy_probability(K, Kp, A, u)) < 1e-6)
    rep.runtime_s = time.time() - t0
    return rep


def _soup_L_rows(fac, stream_id, K, Kp, A, probes, u, replicas, threads):
    def one(i):
        s = sample_soup(fac.replica(stream_id, i), K, Kp, A, u)
        occ = occupation_field(s, probes)
        return occ.times.copy()

    return replicated_rows(one, replicas, threads)


def verify_rayknight_finite(N=8, u=1.0, probes=((1, 0), (2, 1), (-3, 2)),
                            replicas=100_000, seed=0, threads=1, K=((0, 0),),
                            laplace_lambdas=(0.4, 1.2),
                            **_ignored) -> ExperimentReport:
    """Finite-volume pinned isomorphism: moments and Laplace transforms.

    Left side: soup local times plus half the squared pinned field.
    Right side: half the squared shifted pinned field.  Means are also tested
    against the exact identity E[L_x] = u P_x[H_K > T]^2.
    """
    t0 = time.time()
    K = as_point_set(K)
    probes = as_point_set(probes)
    A = as_point_set(tuple(K) + tuple(probes))
    Kp = Domain.ball(N)
    solver = solver_for(Kp)
    fac = StreamFactory(seed)
    pinned_pts = [p for p in ball_points(N) if p not in set(K)]
    from .dirichlet import DirichletSolver  # local import to avoid cycle noise
    psolver = DirichletSolver(Domain(pinned_pts))
    cov = np.zeros((len(probes), len(probes)))
    for j, y in enumerate(probes):
        col = psolver.green_column(y)
        for i, x in enumerate(probes):
            cov[i, j] = col[psolver.domain.index[x]] \
                if x in psolver.domain.index else 0.0
    spec = GaussianSpec(("pinned_set", N, K), probes, cov)
    sampler = FieldSampler(spec)
    if K == ((0, 0),):
        h = shift_function(("dirichlet", N), u, probes)
    else:
        h = shift_function(("general", K, Kp), u, probes)
    avoid = np.array([solver.avoid(K, x) for x in probes])

    L = _soup_L_rows(fac, 0, K, Kp, A, probes, u, replicas, threads)
    phi_left = sampler.sample(fac.replica(1, 0), size=replicas)
    phi_right = sampler.sample(fac.replica(2, 0), size=replicas)
    left = L + 0.5 * phi_left**2
    right = 0.5 * (phi_right + h[None, :]) ** 2

    rep = ExperimentReport("rayknight-finite", seed=seed, replicas=replicas)
    for j, x in enumerate(probes):
        mean_target = u * avoid[j] ** 2
        est, se, z = stats.z_against(L[:, j], mean_target)
        rep.add_stat(f"E[L_{x}] vs u P^2", est, se, mean_target, z)
        d, se, z = stats.welch_z(left[:, j], right[:, j])
        rep.add_stat(f"mean match at {x}", d, se, 0.0, z)
        d, se, z = stats.welch_z(left[:, j] ** 2, right[:, j] ** 2)
        rep.add_stat(f"2nd moment match at {x}", d, se, 0.0, z)
        for lam in laplace_lambdas:
            d, se, z = stats.welch_z(np.exp(-lam * left[:, j]),
                                     np.exp(-lam * right[:, j]))
            rep.add_stat(f"Laplace(lambda={lam}) match at {x}", d, se, 0.0, z)
    rep.extra.update({"N": N, "u": u, "K": list(map(list, K))})
    rep.runtime_s = time.time() - t0
    return rep


def verify_rayknight_infinite(alpha_mean=4.0, alpha_fluct=64.0,
                              probes=((1, 0), (2, 0)), replicas=40_000,
                              seed=0, threads=1, **_ignored) -> ExperimentReport:
    """Infinite-volume pinned isomorphism surrogates via the tilted soup."""
    t0 = time.time()
    probes = as_point_set(probes)
    A = as_point_set(((0, 0),) + tuple(probes))
    sampler = TiltedOccupationSampler(A, probes)
    fac = StreamFactory(seed)
    avals = potential_kernel_many(probes, tol=1e-11)
    rep = ExperimentReport("rayknight-infinite", seed=seed, replicas=replicas)
    rep.extra["occupation_error_bound"] = sampler.bound
    rep.add_check(
        f"occupation sampler error bound {sampler.bound:.2e} < 1e-4",
        sampler.bound < 1e-4,
    )

    def rows_at_level(level, stream_id, n):
        def one(i):
            return sampler.sample(fac.replica(stream_id, i),
                                  2.0 * level / math.pi).occupation

        return replicated_rows(one, n, threads)

    L4 = rows_at_level(alpha_mean, 0, replicas)
    for j, x in enumerate(probes):
        target = avals[j] ** 2
        est, se, z = stats.z_against(L4[:, j] / alpha_mean, target)
        rep.add_stat(f"E[L_{x}]/alpha vs a^2 (alpha={alpha_mean})",
                     est, se, target, z)
        rep.add_check(
            f"|E[L]/alpha - a^2| within 5% at {x} "
            f"({abs(est - target) / target:.3%})",
            abs(est - target) <= 0.05 * target,
        )
    # isomorphism moment matches at alpha_mean
    spec = build_spec(("pinned_infinite",), probes)
    fs = FieldSampler(spec)
    phiL = fs.sample(fac.replica(10, 0), size=replicas)
    phiR = fs.sample(fac.replica(11, 0), size=replicas)
    shift = shift_function(("infinite",), alpha_mean, probes)
    left = L4 + 0.5 * phiL**2
    right = 0.5 * (phiR + shift[None, :]) ** 2
    for j, x in enumerate(probes):
        d, se, z = stats.welch_z(left[:, j], right[:, j])
        rep.add_stat(f"mean match at {x} (alpha={alpha_mean})", d, se, 0.0, z)
        d, se, z = stats.welch_z(left[:, j] ** 2, right[:, j] ** 2)
        rep.add_stat(f"2nd moment match at {x} (alpha={alpha_mean})",
                     d, se, 0.0, z)
    # fluctuation variance at alpha_fluct
    Lf = rows_at_level(alpha_fluct, 20, replicas)
    for j, x in enumerate(probes):
        norm = (Lf[:, j] - alpha_fluct * avals[j] ** 2) / (
            math.sqrt(2.0 * alpha_fluct) * avals[j]
        )
        var = float(norm.var(ddof=1))
        target = 2.0 * avals[j]
        rep.add_check(
            f"fluctuation variance within 10% of 2a at {x} "
            f"(ratio {var / target:.4f}, alpha={alpha_fluct})",
            abs(var / target - 1.0) <= 0.10,
        )
        rep.add_stat(f"fluct var at {x} (alpha={alpha_fluct})", var,
                     var * math.sqrt(2.0 / replicas), target,
                     z=(var - target) / (target * math.sqrt(2.0 / replicas)))
    rep.runtime_s = time.time() - t0
    return rep


def verify_massive_pinned_vacancy(A=((0, 0), (1, 0)), alpha=1.0,
                                  N_grid=(64, 128, 256), seed=0,
                                  **_ignored) -> ExperimentReport:
    """Exact pinned-vacancy exponent along the canonical schedule."""
    t0 = time.time()
    A = as_point_set(A)
    target = 0.5 * math.pi * alpha * capacity_exact(A)
    rep = ExperimentReport("massive-pinned-vacancy", seed=seed)
    errs = []
    for N in N_grid:
        regime = MassiveRegime.canonical(N)
        u_N = (2.0 / math.pi) * alpha * math.log(N) ** 2
        expo = pinned_vacancy_exponent(regime.eps, A, u_N)
        errs.append(abs(expo - target))
        rep.add_stat(f"exponent@N={N}", expo, 0.0, target, z=0.0)
    rep.add_check(
        f"exponent errors decreasing over {list(N_grid)} "
        f"({', '.join(f'{e:.4f}' for e in errs)})",
        all(b < a for a, b in zip(errs, errs[1:])),
    )
    rep.runtime_s = time.time() - t0
    return rep


def torus_vacancy_experiment(N=64, alpha=0.25, A=((0, 0), (1, 0)),
                             replicas=90_000, seed=0, threads=1,
                             **_ignored) -> ExperimentReport:
    """Conditional torus vacancy against the pinned-limit prediction.

    Runs the discrete-time walk for floor((2 alpha/pi) N^2 log^2 N) steps from
    a uniform start, conditions on the origin uncovered by rejection, and
    compares the conditional vacancy of A with exp(-(pi/2) alpha cap(A)).
    The finite-N allowance band is measured from the N/2 -> N drift with a
    1/log N Richardson multiplier, plus 3 combined standard errors.
    """
    t0 = time.time()
    if N > 64:
        raise DomainError("cost guard: N <= 64")
    if alpha > 1:
        raise DomainError("cost guard: alpha <= 1")
    A = as_point_set(A)
    target = math.exp(-0.5 * math.pi * alpha * capacity_exact(A))
    fac = StreamFactory(seed)

    def run_size(Nside, stream_id, n_attempts):
        t_steps = int((2.0 * alpha / math.pi) * Nside * Nside
                      * math.log(Nside) ** 2)
        Apts = [(x % Nside, y % Nside) for (x, y) in A]

        def one(i):
            rng = fac.replica(stream_id, i)
            stream = rng.next_stream()
            x0, y0 = stream.integers(0, Nside, size=2)
            visited = np.zeros((Nside, Nside), dtype=np.uint8)
            status = sim_torus_cover(
                rng.next_stream().bit_generator, int(x0), int(y0), t_steps,
                Nside, visited, 0, 0, 1,
            )
            if status == STATUS_KILLED:
                return np.array([0.0, 0.0])       # rejected: origin covered
            vac = 1.0 if all(not visited[px, py] for px, py in Apts) else 0.0
            return np.array([1.0, vac])

        rows = replicated_rows(one, n_attempts, threads)
        accepted = rows[:, 0].sum()
        if accepted < 1e-4 * n_attempts or accepted < 10:
            raise BudgetError(
                "torus conditioning acceptance too low",
                acceptance_estimate=accepted / n_attempts,
            )
        p_hat = rows[:, 1].sum() / accepted
        se = math.sqrt(max(p_hat * (1 - p_hat), 1e-300) / accepted)
        return p_hat, se, int(accepted), t_steps

    p_half, se_half, acc_half, t_half = run_size(N // 2, 0, replicas // 2)
    p_full, se_full, acc_full, t_full = run_size(N, 1, replicas)
    drift = abs(p_half - p_full)
    r = (1.0 / math.log(N)) / (1.0 / math.log(N // 2) - 1.0 / math.log(N))
    band = r * (drift + 3.0 * math.hypot(se_half, se_full))
    rep = ExperimentReport("torus-vacancy", seed=seed, replicas=replicas)
    rep.add_stat(f"conditional vacancy N={N // 2}", p_half, se_half, target,
                 z=0.0)
    rep.add_stat(f"conditional vacancy N={N}", p_full, se_full, target, z=0.0)
    rep.add_check(
        f"|estimate - target| = {abs(p_full - target):.4f} within declared "
        f"band {band:.4f} (drift {drift:.4f}, multiplier {r:.2f})",
        abs(p_full - target) <= band,
    )
    rep.extra.update({
        "alpha": alpha, "target": target, "band": band,
        "accepted": [acc_half, acc_full], "steps": [t_half, t_full],
        "acceptance_rate": acc_full / replicas,
    })
    rep.runtime_s = time.time() - t0
    return rep


EXPERIMENTS = {
    "capacity-convergence": verify_capacity_convergence,
    "vacancy-exact": verify_vacancy,
    "sampler-equivalence": verify_sampler_equivalence,
    "laplace": verify_laplace,
    "rayknight-finite": verify_rayknight_finite,
    "rayknight-infinite": verify_rayknight_infinite,
    "massive-pinned-vacancy": verify_massive_pinned_vacancy,
    "torus-vacancy": torus_vacancy_experiment,
}
