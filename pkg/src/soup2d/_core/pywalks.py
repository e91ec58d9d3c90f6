"""Pure-Python fallback for the walk kernels.

Decision-for-decision identical to the compiled versions in ``_walks.pyx``:
one uniform double per step, directions ordered E, W, N, S, cumulative scans
in that order.  Uniforms are pre-drawn in chunks for speed; since every
kernel call receives its own child stream, the over-draw cannot leak into
later operations.
"""

from __future__ import annotations

import numpy as np

STATUS_EXITED = 0
STATUS_KILLED = 1
STATUS_MAXSTEPS = 2
STATUS_LEFT_GRID = 3

_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_CHUNK = 4096


class _Uniforms:
    """Sequential uniforms drawn in chunks from a Generator."""

    def __init__(self, bit_generator):
        self._gen = np.random.Generator(bit_generator)
        self._buf = np.empty(0)
        self._pos = 0

    def next(self) -> float:
        if self._pos >= self._buf.size:
            self._buf = self._gen.random(_CHUNK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def sim_srw_exit(bit_generator, x0, y0, mask, ox, oy, max_steps):
    us = _Uniforms(bit_generator)
    nx, ny = mask.shape
    x, y = int(x0), int(y0)
    if not (0 <= x - ox < nx and 0 <= y - oy < ny and mask[x - ox, y - oy]):
        raise ValueError("start point outside the domain mask")
    path = []
    status = STATUS_MAXSTEPS
    for _ in range(max_steps):
        path.append((x, y))
        d = int(us.next() * 4.0)
        if d > 3:
            d = 3
        x += _STEPS[d][0]
        y += _STEPS[d][1]
        ix, iy = x - ox, y - oy
        if not (0 <= ix < nx and 0 <= iy < ny and mask[ix, iy]):
            status = STATUS_EXITED
            break
    return np.array(path, dtype=np.int64).reshape(-1, 2), status


def sim_weighted_exit(bit_generator, x0, y0, w, mask, ox, oy, max_steps):
    if w.shape != mask.shape:
        raise ValueError("weight and mask grids must have equal shapes")
    if mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any():
        raise ValueError("mask must be zero on the grid border")
    us = _Uniforms(bit_generator)
    nx, ny = mask.shape
    x, y = int(x0), int(y0)
    if not (0 <= x - ox < nx and 0 <= y - oy < ny and mask[x - ox, y - oy]):
        raise ValueError("start point outside the domain mask")
    path = []
    status = STATUS_MAXSTEPS
    for _ in range(max_steps):
        path.append((x, y))
        wt = [w[x + dx - ox, y + dy - oy] for dx, dy in _STEPS]
        total = wt[0] + wt[1] + wt[2] + wt[3]
        if total <= 0.0:
            raise ValueError("transform stuck: zero total neighbor weight")
        u = us.next() * total
        acc = 0.0
        d = 3
        for k in range(4):
            acc += wt[k]
            if u < acc:
                d = k
                break
        x += _STEPS[d][0]
        y += _STEPS[d][1]
        ix, iy = x - ox, y - oy
        if not (0 <= ix < nx and 0 <= iy < ny and mask[ix, iy]):
            status = STATUS_EXITED
            break
    return np.array(path, dtype=np.int64).reshape(-1, 2), status


def sim_massive(bit_generator, x0, y0, eps, max_steps):
    us = _Uniforms(bit_generator)
    pk = eps / (1.0 + eps)
    x, y = int(x0), int(y0)
    path = []
    status = STATUS_MAXSTEPS
    for _ in range(max_steps):
        path.append((x, y))
        u = us.next()
        if u < pk:
            status = STATUS_KILLED
            break
        d = int((u - pk) / (1.0 - pk) * 4.0)
        if d > 3:
            d = 3
        x += _STEPS[d][0]
        y += _STEPS[d][1]
    return np.array(path, dtype=np.int64).reshape(-1, 2), status


def sim_massive_htransform(bit_generator, x0, y0, h, ox, oy, eps, max_steps):
    us = _Uniforms(bit_generator)
    nx, ny = h.shape
    pk = eps / (1.0 + eps)
    q = 0.25 / (1.0 + eps)
    x, y = int(x0), int(y0)
    path = []
    status = STATUS_MAXSTEPS
    for _ in range(max_steps):
        ix, iy = x - ox, y - oy
        if ix <= 0 or ix >= nx - 1 or iy <= 0 or iy >= ny - 1:
            status = STATUS_LEFT_GRID
            break
        path.append((x, y))
        wt = [q * h[ix + dx, iy + dy] for dx, dy in _STEPS]
        total = pk + wt[0] + wt[1] + wt[2] + wt[3]
        u = us.next() * total
        if u < pk:
            status = STATUS_KILLED
            break
        acc = pk
        d = 3
        for k in range(4):
            acc += wt[k]
            if u < acc:
                d = k
                break
        x += _STEPS[d][0]
        y += _STEPS[d][1]
    return np.array(path, dtype=np.int64).reshape(-1, 2), status


def sim_torus_cover(bit_generator, x0, y0, n_steps, N, visited, fx, fy,
                    abort_on_forbidden):
    us = _Uniforms(bit_generator)
    x, y = int(x0) % N, int(y0) % N
    fx, fy = int(fx) % N, int(fy) % N
    for step in range(n_steps + 1):
        visited[x, y] = 1
        if abort_on_forbidden and x == fx and y == fy:
            return STATUS_KILLED
        if step == n_steps:
            break
        d = int(us.next() * 4.0)
        if d > 3:
            d = 3
        x = (x + _STEPS[d][0]) % N
        y = (y + _STEPS[d][1]) % N
    if abort_on_forbidden and visited[fx, fy]:
        return STATUS_KILLED
    return STATUS_EXITED


def sim_visit_chain(bit_generator, start, cum, counts, max_steps):
    us = _Uniforms(bit_generator)
    m = cum.shape[1]
    state = int(start)
    for _ in range(max_steps):
        counts[state] += 1
        u = us.next()
        nxt = -1
        for j in range(m):
            if u < cum[state, j]:
                nxt = j
                break
        if nxt < 0:
            return STATUS_EXITED
        state = nxt
    return STATUS_MAXSTEPS
