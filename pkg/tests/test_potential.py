"""Potential kernel and massive Green function against independent oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest

from soup2d.errors import DomainError
from soup2d.potential import (PotentialTable, massive_green,
                              potential_asymptotic, potential_kernel,
                              potential_kernel_many)

A11 = 4.0 / math.pi
A20 = 4.0 - 8.0 / math.pi


def diagonal_value(n):
    """a(n, n) = (4/pi) sum_{j<=n} 1/(2j-1), the classical closed form."""
    return (4.0 / math.pi) * sum(1.0 / (2 * j - 1) for j in range(1, n + 1))


def mccrea_whipple(radius):
    """Fill a(x) on an octant from the diagonal closed form and harmonicity."""
    vals = {(0, 0): 0.0, (1, 0): 1.0}
    for n in range(1, radius + 1):
        vals[(n, n)] = diagonal_value(n)
    def get(p, q):
        p, q = abs(p), abs(q)
        return vals[(max(p, q), min(p, q))]

    for x in range(1, radius):
        # harmonicity at (x, x): two neighbors coincide with (x+1, x) by symmetry
        vals[(x + 1, x)] = 2.0 * get(x, x) - get(x, x - 1)
        for y in range(x):
            # harmonicity at (x, y) determines a(x+1, y)
            vals[(x + 1, y)] = (
                4.0 * get(x, y) - get(x - 1, y) - get(x, y + 1) - get(x, y - 1)
            )
    return vals


def quadrature_2d(x, panels=48):
    """Independent oracle: tensor-product Gauss-Legendre on [-pi, pi]^2."""
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(-math.pi, math.pi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    t = (mid[:, None] + half * nodes[None, :]).ravel()
    w = np.tile(weights * half, panels)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    W = np.outer(w, w)
    num = 1.0 - np.cos(x[0] * T1 + x[1] * T2)
    den = 1.0 - 0.5 * (np.cos(T1) + np.cos(T2))
    integrand = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    # the removable singularity at the origin: num/den -> quadratic form,
    # but GL nodes never hit it exactly
    return float((integrand * W).sum() / (2 * math.pi) ** 2)


def test_exact_small_values():
    assert potential_kernel((0, 0)) == 0.0
    assert abs(potential_kernel((1, 0)) - 1.0) < 1e-12
    assert abs(potential_kernel((1, 1)) - A11) < 1e-12
    assert abs(potential_kernel((2, 0)) - A20) < 1e-12


def test_against_2d_quadrature_oracle():
    for x in ((1, 1), (2, 0), (3, 1)):
        assert abs(potential_kernel(x) - quadrature_2d(x)) < 1e-8


def test_against_mccrea_whipple():
    vals = mccrea_whipple(5)
    for (p, q), v in vals.items():
        assert potential_kernel((p, q)) == pytest.approx(v, abs=1e-9)


def test_diagonal_closed_form():
    for n in range(1, 7):
        assert potential_kernel((n, n)) == pytest.approx(diagonal_value(n),
                                                         abs=1e-12)


@pytest.mark.parametrize("x", [(0, 0), (1, 0), (3, 2), (-5, 4), (10, -10),
                               (17, 0)])
def test_harmonicity(x):
    nbrs = [(x[0] + 1, x[1]), (x[0] - 1, x[1]), (x[0], x[1] + 1),
            (x[0], x[1] - 1)]
    lap = 0.25 * sum(potential_kernel(p, tol=1e-12) for p in nbrs) \
        - potential_kernel(x, tol=1e-12)
    target = 1.0 if x == (0, 0) else 0.0
    assert lap == pytest.approx(target, abs=1e-11)


def test_dihedral_symmetry():
    base = potential_kernel((3, 1))
    images = [(3, 1), (-3, 1), (3, -1), (-3, -1), (1, 3), (-1, 3), (1, -3),
              (-1, -3)]
    for p in images:
        assert potential_kernel(p) == base  # exact: the integrand sees |p|,|q|


class TestAsymptotics:
    @pytest.fixture(scope="class")
    def table(self):
        return PotentialTable(128, tol=1e-11)

    def test_constant_positive(self, table):
        assert table.asymptotic_constant > 0
        assert table.asymptotic_band < 1e-3

    def test_far_field_accuracy(self, table):
        exact = potential_kernel((100, 0))
        assert abs(potential_asymptotic((100, 0), table) - exact) < 1e-3

    def test_residual_at_unit_vector(self, table):
        # a(1,0) - asymptotic(1,0) = 1 - k since log 1 = 0
        resid = potential_kernel((1, 0)) - potential_asymptotic((1, 0), table)
        assert resid == pytest.approx(1.0 - table.asymptotic_constant, abs=1e-12)

    def test_monotone_improvement(self, table):
        errs = []
        for r in (16, 32, 64):
            worst = max(
                abs(potential_asymptotic((r, d), table)
                    - potential_kernel((r, d)))
                for d in (0, 1, r // 2)
            )
            errs.append(worst)
        assert errs[2] < errs[1] < errs[0]

    def test_origin_rejected(self, table):
        with pytest.raises(DomainError):
            potential_asymptotic((0, 0), table)

    def test_table_lookup(self, table):
        assert table.value((0, 0)) == 0.0
        assert table.value((-7, 3)) == table.value((3, 7))
        with pytest.raises(DomainError):
            table.value((200, 0))


def massive_series_oracle(terms=400):
    """g_1(0,0) = sum_m p_{2m}(0) 2^{-(2m+1)} with p_{2m}(0) = C(2m,m)^2/16^m."""
    total = Fraction(0)
    for m in range(terms):
        p = Fraction(math.comb(2 * m, m) ** 2, 16**m)
        total += p * Fraction(1, 2 ** (2 * m + 1))
    return float(total)


class TestMassiveGreen:
    def test_series_oracle(self):
        assert massive_green(1.0, (0, 0)) == pytest.approx(
            massive_series_oracle(), abs=1e-12
        )

    def test_large_eps_limit(self):
        for eps in (1e2, 1e4):
            assert (1 + eps) * massive_green(eps, (0, 0)) == pytest.approx(
                1.0, abs=2.0 / eps
            )

    def test_increment_limit_to_potential(self):
        # g_eps(0,0) - g_eps(0,x) -> a(x) with decreasing discrepancy
        x = (2, 1)
        a = potential_kernel(x)
        gaps = [
            abs(massive_green(eps, (0, 0)) - massive_green(eps, x) - a)
            for eps in (1e-1, 1e-2, 1e-3)
        ]
        assert gaps[2] < gaps[1] < gaps[0]

    def test_symmetry_translation(self):
        assert massive_green(0.3, (2, -5)) == massive_green(0.3, (5, 2))

    def test_eps_domain(self):
        with pytest.raises(DomainError):
            massive_green(0.0, (1, 0))
        with pytest.raises(DomainError):
            massive_green(-1.0, (1, 0))


def test_batch_matches_scalar():
    pts = [(0, 0), (1, 0), (5, 3), (-2, 7)]
    batch = potential_kernel_many(pts)
    for p, v in zip(pts, batch):
        assert potential_kernel(p) == pytest.approx(float(v), abs=1e-13)
