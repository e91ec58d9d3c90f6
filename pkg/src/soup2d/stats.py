"""Small statistical helpers for the verification drivers.

Every Monte Carlo estimate travels with a standard error and verdicts come
from z-thresholds or chi-square p-values; nothing is eyeballed.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps


def mean_stderr(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    n = x.size
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return m, se


def z_against(x, target) -> tuple[float, float, float]:
    """(estimate, stderr, z) of the sample mean against an exact target."""
    m, se = mean_stderr(x)
    z = 0.0 if m == target else (m - target) / se if se > 0 else float("inf")
    return m, se, z


def welch_z(x, y) -> tuple[float, float, float]:
    """(diff, stderr, z) comparing two independent sample means."""
    mx, sx = mean_stderr(x)
    my, sy = mean_stderr(y)
    se = math.hypot(sx, sy)
    d = mx - my
    z = 0.0 if d == 0 else d / se if se > 0 else float("inf")
    return d, se, z


def binomial_z(successes, n, p_target) -> tuple[float, float, float]:
    p_hat = successes / n
    se = math.sqrt(max(p_target * (1.0 - p_target), 1e-300) / n)
    return p_hat, se, (p_hat - p_target) / se


def _merge_tail_bins(observed, expected, min_expected=5.0):
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and obs:
        obs[-1] += acc_o
        exp[-1] += acc_e
    return np.array(obs), np.array(exp)


def poisson_gof_pvalue(counts, rate) -> float:
    """Chi-square goodness of fit of integer counts against Poisson(rate)."""
    counts = np.asarray(counts, dtype=int)
    n = counts.size
    kmax = int(counts.max()) + 1
    observed = np.bincount(counts, minlength=kmax + 1).astype(float)
    ks = np.arange(kmax + 1)
    pmf = sps.poisson.pmf(ks, rate)
    pmf[-1] = 1.0 - sps.poisson.cdf(kmax - 1, rate)
    expected = n * pmf
    obs, exp = _merge_tail_bins(observed, expected)
    if len(obs) < 2:
        return 1.0
    exp *= obs.sum() / exp.sum()
    stat = float(((obs - exp) ** 2 / exp).sum())
    return float(sps.chi2.sf(stat, df=len(obs) - 1))


def histogram_gof_pvalue(counts, probs) -> float:
    """Chi-square GOF of category counts against exact probabilities."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    expected = n * probs / probs.sum()
    keep = expected > 0
    obs, exp = _merge_tail_bins(counts[keep], expected[keep])
    if len(obs) < 2:
        return 1.0
    stat = float(((obs - exp) ** 2 / exp).sum())
    return float(sps.chi2.sf(stat, df=len(obs) - 1))


def two_sample_hist_pvalue(counts_a, counts_b) -> float:
    """Chi-square homogeneity test for two category-count vectors."""
    a = np.asarray(counts_a, dtype=float)
    b = np.asarray(counts_b, dtype=float)
    keep = (a + b) > 0
    table = np.vstack([a[keep], b[keep]])
    if table.shape[1] < 2:
        return 1.0
    stat, p, _, _ = sps.chi2_contingency(table)
    return float(p)


def ks_exponential_pvalue(samples, rate) -> float:
    return float(sps.kstest(np.asarray(samples), "expon",
                            args=(0.0, 1.0 / rate)).pvalue)
