"""Compiled and pure-Python walk kernels must agree decision-for-decision."""

import numpy as np
import pytest
from numpy.random import Philox

import soup2d._core as core
from soup2d._core import pywalks


def _mask(r):
    m = np.zeros((2 * r + 3, 2 * r + 3), dtype=np.uint8)
    m[1:-1, 1:-1] = 1
    return m, -(r + 1), -(r + 1)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_srw_exit_equivalence(seed):
    mask, ox, oy = _mask(10)
    p1, s1 = core.sim_srw_exit(Philox(key=seed), 0, 0, mask, ox, oy, 10**6)
    p2, s2 = pywalks.sim_srw_exit(Philox(key=seed), 0, 0, mask, ox, oy, 10**6)
    assert s1 == s2 == core.STATUS_EXITED
    assert np.array_equal(p1, p2)
    # consecutive sites are neighbors and all recorded sites are inside
    assert (np.abs(np.diff(p1, axis=0)).sum(axis=1) == 1).all()
    assert (np.abs(p1).max(axis=1) <= 10).all()


@pytest.mark.parametrize("seed", [4, 5])
def test_weighted_exit_equivalence(seed):
    mask, ox, oy = _mask(9)
    w = np.random.default_rng(seed).random(mask.shape) + 0.05
    p1, s1 = core.sim_weighted_exit(Philox(key=seed), 1, 0, w, mask, ox, oy,
                                    10**6)
    p2, s2 = pywalks.sim_weighted_exit(Philox(key=seed), 1, 0, w, mask, ox, oy,
                                       10**6)
    assert s1 == s2
    assert np.array_equal(p1, p2)


@pytest.mark.parametrize("eps", [0.5, 0.02])
def test_massive_equivalence(eps):
    p1, s1 = core.sim_massive(Philox(key=7), 0, 0, eps, 10**7)
    p2, s2 = pywalks.sim_massive(Philox(key=7), 0, 0, eps, 10**7)
    assert s1 == s2 == core.STATUS_KILLED
    assert np.array_equal(p1, p2)


def test_massive_htransform_equivalence():
    h = np.random.default_rng(9).random((41, 41))
    h[20, 20] = 0.0
    a1 = core.sim_massive_htransform(Philox(key=8), 1, 0, h, -20, -20, 0.1,
                                     10**6)
    a2 = pywalks.sim_massive_htransform(Philox(key=8), 1, 0, h, -20, -20, 0.1,
                                        10**6)
    assert a1[1] == a2[1]
    assert np.array_equal(a1[0], a2[0])


def test_torus_equivalence():
    v1 = np.zeros((32, 32), np.uint8)
    v2 = np.zeros((32, 32), np.uint8)
    r1 = core.sim_torus_cover(Philox(key=10), 3, 4, 20_000, 32, v1, 0, 0, 1)
    r2 = pywalks.sim_torus_cover(Philox(key=10), 3, 4, 20_000, 32, v2, 0, 0, 1)
    assert r1 == r2
    assert np.array_equal(v1, v2)


def test_visit_chain_equivalence():
    R = np.array([[0.2, 0.3], [0.4, 0.1]])
    cum = np.cumsum(R, axis=1)
    c1 = np.zeros(2, np.int64)
    c2 = np.zeros(2, np.int64)
    assert core.sim_visit_chain(Philox(key=11), 0, cum, c1, 10**6) \
        == pywalks.sim_visit_chain(Philox(key=11), 0, cum, c2, 10**6)
    assert np.array_equal(c1, c2)
    assert c1[0] >= 1


def test_weighted_exit_border_guard():
    mask = np.ones((5, 5), dtype=np.uint8)      # nonzero border: rejected
    w = np.ones((5, 5))
    with pytest.raises(ValueError):
        core.sim_weighted_exit(Philox(key=1), 0, 0, w, mask, -2, -2, 100)
    with pytest.raises(ValueError):
        pywalks.sim_weighted_exit(Philox(key=1), 0, 0, w, mask, -2, -2, 100)


def test_srw_start_outside_rejected():
    mask, ox, oy = _mask(3)
    with pytest.raises(ValueError):
        core.sim_srw_exit(Philox(key=1), 99, 99, mask, ox, oy, 100)


def test_step_distribution_uniform():
    # the E,W,N,S mapping covers [0,1) uniformly
    mask, ox, oy = _mask(1)
    from collections import Counter

    c = Counter()
    for i in range(20_000):
        p, s = core.sim_srw_exit(Philox(key=(i << 8) + 13), 0, 0, mask, ox, oy,
                                 10)
        if len(p) > 1:
            c[tuple(p[1] - p[0])] += 1
    total = sum(c.values())
    for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        assert abs(c[d] / total - 0.25) < 0.02


def test_backend_identifies():
    assert core.BACKEND in ("cython", "python")
