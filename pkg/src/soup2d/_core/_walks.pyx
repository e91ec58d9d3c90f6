# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-walk kernels.

Each kernel consumes exactly one uniform double per walk step from the
supplied numpy BitGenerator, with the same decision mapping as the pure
Python fallback in ``pywalks.py`` (direction order E, W, N, S; cumulative
scans in that order).  Paths are returned as (n, 2) int64 arrays of the
sites where time is spent; Dirichlet-killed walks stop *before* recording
the first exterior site.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t

cnp.import_array()

cdef const char *CAPSULE_NAME = "BitGenerator"

cdef int DX[4]
cdef int DY[4]
DX[0], DX[1], DX[2], DX[3] = 1, -1, 0, 0
DY[0], DY[1], DY[2], DY[3] = 0, 0, 1, -1

STATUS_EXITED = 0
STATUS_KILLED = 1
STATUS_MAXSTEPS = 2
STATUS_LEFT_GRID = 3


cdef bitgen_t *_get_bitgen(object bit_generator) except NULL:
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, CAPSULE_NAME):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t *> PyCapsule_GetPointer(capsule, CAPSULE_NAME)


cdef inline cnp.ndarray _trim(cnp.ndarray path, Py_ssize_t n):
    return path[:n].copy()


def sim_srw_exit(object bit_generator, long x0, long y0,
                 cnp.uint8_t[:, ::1] mask, long ox, long oy,
                 long max_steps):
    """SRW skeleton from (x0, y0) until it leaves the mask. -> (path, status)"""
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef Py_ssize_t cap = 256
    cdef cnp.ndarray path = np.empty((cap, 2), dtype=np.int64)
    cdef long[:, ::1] pv = path
    cdef long x = x0, y = y0
    cdef Py_ssize_t n = 0
    cdef long steps = 0
    cdef long nx = mask.shape[0], ny = mask.shape[1]
    cdef long ix, iy
    cdef int d
    cdef double u
    cdef int status = STATUS_MAXSTEPS
    ix = x - ox; iy = y - oy
    if ix < 0 or ix >= nx or iy < 0 or iy >= ny or not mask[ix, iy]:
        raise ValueError("start point outside the domain mask")
    while steps < max_steps:
        if n >= cap:
            cap *= 2
            new = np.empty((cap, 2), dtype=np.int64)
            new[:n] = path[:n]
            path = new
            pv = path
        pv[n, 0] = x; pv[n, 1] = y
        n += 1
        with bit_generator.lock:
            u = rng.next_double(rng.state)
        d = <int>(u * 4.0)
        if d > 3:
            d = 3
        x += DX[d]; y += DY[d]
        steps += 1
        ix = x - ox; iy = y - oy
        if ix < 0 or ix >= nx or iy < 0 or iy >= ny or not mask[ix, iy]:
            status = STATUS_EXITED
            break
    return _trim(path, n), status


def sim_weighted_exit(object bit_generator, long x0, long y0,
                      double[:, ::1] w, cnp.uint8_t[:, ::1] mask,
                      long ox, long oy, long max_steps):
    """Doob-transformed skeleton: step x->y with prob w(y)/sum_nbrs w.

    w and mask share shape and offset; the mask border ring must be zero so
    neighbor weight reads stay in bounds.  Stops before recording the first
    site outside the mask.
    """
    if w.shape[0] != mask.shape[0] or w.shape[1] != mask.shape[1]:
        raise ValueError("weight and mask grids must have equal shapes")
    if (np.asarray(mask)[0, :].any() or np.asarray(mask)[-1, :].any()
            or np.asarray(mask)[:, 0].any() or np.asarray(mask)[:, -1].any()):
        raise ValueError("mask must be zero on the grid border")
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef Py_ssize_t cap = 256
    cdef cnp.ndarray path = np.empty((cap, 2), dtype=np.int64)
    cdef long[:, ::1] pv = path
    cdef long x = x0, y = y0
    cdef Py_ssize_t n = 0
    cdef long steps = 0
    cdef long nx = mask.shape[0], ny = mask.shape[1]
    cdef long ix, iy
    cdef int d, k
    cdef double u, total, acc
    cdef double wt[4]
    cdef int status = STATUS_MAXSTEPS
    ix = x - ox; iy = y - oy
    if ix < 0 or ix >= nx or iy < 0 or iy >= ny or not mask[ix, iy]:
        raise ValueError("start point outside the domain mask")
    while steps < max_steps:
        if n >= cap:
            cap *= 2
            new = np.empty((cap, 2), dtype=np.int64)
            new[:n] = path[:n]
            path = new
            pv = path
        pv[n, 0] = x; pv[n, 1] = y
        n += 1
        total = 0.0
        for k in range(4):
            wt[k] = w[x + DX[k] - ox, y + DY[k] - oy]
            total += wt[k]
        if total <= 0.0:
            raise ValueError("transform stuck: zero total neighbor weight")
        with bit_generator.lock:
            u = rng.next_double(rng.state)
        u *= total
        acc = 0.0
        d = 3
        for k in range(4):
            acc += wt[k]
            if u < acc:
                d = k
                break
        x += DX[d]; y += DY[d]
        steps += 1
        ix = x - ox; iy = y - oy
        if ix < 0 or ix >= nx or iy < 0 or iy >= ny or not mask[ix, iy]:
            status = STATUS_EXITED
            break
    return _trim(path, n), status


def sim_massive(object bit_generator, long x0, long y0, double eps,
                long max_steps):
    """eps-killed SRW skeleton (kill prob eps/(1+eps) per visited site)."""
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef Py_ssize_t cap = 256
    cdef cnp.ndarray path = np.empty((cap, 2), dtype=np.int64)
    cdef long[:, ::1] pv = path
    cdef long x = x0, y = y0
    cdef Py_ssize_t n = 0
    cdef long steps = 0
    cdef double pk = eps / (1.0 + eps)
    cdef double u
    cdef int d
    cdef int status = STATUS_MAXSTEPS
    while steps < max_steps:
        if n >= cap:
            cap *= 2
            new = np.empty((cap, 2), dtype=np.int64)
            new[:n] = path[:n]
            path = new
            pv = path
        pv[n, 0] = x; pv[n, 1] = y
        n += 1
        with bit_generator.lock:
            u = rng.next_double(rng.state)
        if u < pk:
            status = STATUS_KILLED
            break
        d = <int>((u - pk) / (1.0 - pk) * 4.0)
        if d > 3:
            d = 3
        x += DX[d]; y += DY[d]
        steps += 1
    return _trim(path, n), status


def sim_massive_htransform(object bit_generator, long x0, long y0,
                           double[:, ::1] h, long ox, long oy,
                           double eps, long max_steps):
    """eps-killed walk conditioned on never hitting the h=0 set.

    h(w) = P_w[H_A > xi]; per-site event weights are kill: eps/(1+eps),
    neighbor w: h(w)/(4(1+eps)).  Returns STATUS_LEFT_GRID if the walk
    reaches the edge of the h grid (caller sizes the grid so this is rare).
    """
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef Py_ssize_t cap = 256
    cdef cnp.ndarray path = np.empty((cap, 2), dtype=np.int64)
    cdef long[:, ::1] pv = path
    cdef long x = x0, y = y0
    cdef Py_ssize_t n = 0
    cdef long steps = 0
    cdef long nx = h.shape[0], ny = h.shape[1]
    cdef double pk = eps / (1.0 + eps)
    cdef double q = 0.25 / (1.0 + eps)
    cdef double u, total, acc
    cdef double wt[4]
    cdef int d, k
    cdef long ix, iy
    cdef int status = STATUS_MAXSTEPS
    while steps < max_steps:
        ix = x - ox; iy = y - oy
        if ix <= 0 or ix >= nx - 1 or iy <= 0 or iy >= ny - 1:
            status = STATUS_LEFT_GRID
            break
        if n >= cap:
            cap *= 2
            new = np.empty((cap, 2), dtype=np.int64)
            new[:n] = path[:n]
            path = new
            pv = path
        pv[n, 0] = x; pv[n, 1] = y
        n += 1
        total = pk
        for k in range(4):
            wt[k] = q * h[ix + DX[k], iy + DY[k]]
            total += wt[k]
        with bit_generator.lock:
            u = rng.next_double(rng.state)
        u *= total
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
        x += DX[d]; y += DY[d]
        steps += 1
    return _trim(path, n), status


def sim_torus_cover(object bit_generator, long x0, long y0, long n_steps,
                    long N, cnp.uint8_t[:, ::1] visited,
                    long fx, long fy, int abort_on_forbidden):
    """Discrete-time SRW on the N-torus; marks visited sites incl. the start.

    Returns STATUS_KILLED as soon as the forbidden site is visited when
    abort_on_forbidden is set, else STATUS_EXITED after n_steps.
    """
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef long x = x0 % N, y = y0 % N
    cdef long step
    cdef double u
    cdef int d
    cdef int status = 0
    fx = fx % N; fy = fy % N
    with bit_generator.lock, nogil:
        for step in range(n_steps + 1):
            visited[x, y] = 1
            if abort_on_forbidden and x == fx and y == fy:
                status = 1
                break
            if step == n_steps:
                break
            u = rng.next_double(rng.state)
            d = <int>(u * 4.0)
            if d > 3:
                d = 3
            x += DX[d]; y += DY[d]
            if x < 0: x += N
            elif x >= N: x -= N
            if y < 0: y += N
            elif y >= N: y -= N
    if status == 1 or (abort_on_forbidden and visited[fx, fy]):
        return STATUS_KILLED
    return STATUS_EXITED


def sim_visit_chain(object bit_generator, long start,
                    double[:, ::1] cum, long[::1] counts, long max_steps):
    """Finite-state visit chain with per-row cumulative kernels.

    cum[i, j] is the cumulative transition mass of row i through state j;
    mass beyond cum[i, m-1] is the stopping (escape) probability.  Adds one
    to counts[state] per visit, starting state included.
    """
    cdef bitgen_t *rng = _get_bitgen(bit_generator)
    cdef long m = cum.shape[1]
    cdef long state = start
    cdef long steps = 0
    cdef double u
    cdef long j, nxt
    cdef int escaped = 0
    with bit_generator.lock, nogil:
        while steps < max_steps:
            counts[state] += 1
            u = rng.next_double(rng.state)
            nxt = -1
            for j in range(m):
                if u < cum[state, j]:
                    nxt = j
                    break
            if nxt < 0:
                escaped = 1
                break
            state = nxt
            steps += 1
    return STATUS_EXITED if escaped else STATUS_MAXSTEPS
