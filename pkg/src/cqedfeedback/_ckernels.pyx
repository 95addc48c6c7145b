# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``.

Same signatures and semantics; panels are refined depth-first with an
explicit stack instead of numpy batches.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, tan, cos, fabs, M_PI
from libc.stdlib cimport malloc, realloc, free

from ._gk import NODES, KRONROD, GAUSS
from .errors import PoleProximityError
from ._pykernels import noise_model

cnp.import_array()

NAME = "cython"

cdef double EPS = 2.220446049250313e-16
cdef double ROUNDOFF_FACTOR = 50.0

cdef double _NODES[15]
cdef double _WK[15]
cdef double _WG[15]
for _i in range(15):
    _NODES[_i] = NODES[_i]
    _WK[_i] = KRONROD[_i]
    _WG[_i] = GAUSS[_i]

cdef enum:
    CAVITY = 0
    INPUT = 1
    D_L = 2
    D_R = 3
    C_L = 4
    C_R = 5


cdef struct Model:
    int nf
    long *codes
    long *powers
    double *widths
    double kap, de, lam_l, lam_r, g2, guard
    double complex wp, wm
    double coef2, scale
    double noise_poles, noise_nearest


cdef inline double complex _ipow(double complex z, long n) noexcept nogil:
    cdef double complex result = 1.0
    if n == 1:
        return z
    while n:
        if n & 1:
            result = result * z
        n >>= 1
        if n:
            z = z * z
    return result


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef int _eval(Model *m, double dk, double complex *out) noexcept nogil:
    """Return 0 on success, 1 on pole proximity."""
    cdef double complex res = 1.0
    cdef double complex base, rabi = 0.0, num
    cdef bint have_rabi = False
    cdef int i
    cdef long code, p
    cdef double w
    cdef double complex ih = 0.5j * m.kap
    for i in range(m.nf):
        code = m.codes[i]
        p = m.powers[i]
        if p == 0:
            continue
        if code == CAVITY:
            base = sqrt(m.kap / (2 * M_PI)) / (dk + ih)
        elif code == INPUT:
            w = m.widths[i]
            base = sqrt(w / (2 * M_PI)) / (dk + 0.5j * w)
        elif m.g2 == 0.0:
            if code == D_R or code == C_R:
                out[0] = 0.0
                return 0
            continue
        else:
            if not have_rabi:
                if cabs2(dk - m.wp) < m.guard * m.guard or cabs2(dk - m.wm) < m.guard * m.guard:
                    return 1
                rabi = (dk - m.wp) * (dk - m.wm)
                have_rabi = True
            if code == D_L:
                base = ((dk - m.de) * (dk + ih) - m.lam_r * m.lam_r) / rabi
            elif code == D_R:
                base = sqrt(2.0) * m.lam_l * m.lam_r / rabi
            elif code == C_L:
                num = ((dk - m.de) * (dk * dk + 0.25 * m.kap * m.kap)
                       - dk * (m.lam_r * m.lam_r + 2 * m.lam_l * m.lam_l)
                       + ih * (m.lam_r * m.lam_r - 2 * m.lam_l * m.lam_l))
                base = num / ((dk - ih) * rabi)
            else:
                base = sqrt(2.0) * 1j * m.kap * m.lam_l * m.lam_r / ((dk - ih) * rabi)
        res = res * _ipow(base, p)
    out[0] = res
    return 0


cdef void _fill_model(Model *m, long[::1] codes, long[::1] powers, double[::1] widths,
                      double[::1] consts):
    m.nf = codes.shape[0]
    m.codes = &codes[0] if m.nf else NULL
    m.powers = &powers[0] if m.nf else NULL
    m.widths = &widths[0] if m.nf else NULL
    m.kap = consts[0]
    m.de = consts[1]
    m.lam_l = consts[2]
    m.lam_r = consts[3]
    m.wp = consts[4] + 1j * consts[5]
    m.wm = consts[6] + 1j * consts[7]
    m.guard = consts[8]
    m.g2 = 2 * m.lam_l * m.lam_l + m.lam_r * m.lam_r


def eval_product(double[::1] dk, codes, powers, widths, double[::1] consts):
    """Product of closed-form factors at real offsets ``dk``."""
    cdef long[::1] c = np.ascontiguousarray(codes, dtype=np.int64)
    cdef long[::1] p = np.ascontiguousarray(powers, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(widths, dtype=np.float64)
    cdef Model m
    _fill_model(&m, c, p, w, consts)
    cdef Py_ssize_t n = dk.shape[0], i
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef int bad = 0
    with nogil:
        for i in range(n):
            if _eval(&m, dk[i], &o[i]):
                bad = 1
                break
    if bad:
        raise PoleProximityError("evaluation point on a Rabi pole")
    return out


cdef struct Panel:
    double a, b, k, err, resabs


cdef int _gk(Model *m, Panel *P) noexcept nogil:
    cdef double half = 0.5 * (P.b - P.a)
    cdef double mid = 0.5 * (P.b + P.a)
    cdef double k = 0, g = 0, ra = 0, th, c, fx
    cdef double complex v
    cdef int j
    for j in range(15):
        th = mid + half * _NODES[j]
        if _eval(m, m.scale * tan(th), &v):
            return 1
        c = cos(th)
        fx = m.coef2 * cabs2(v) * m.scale / (c * c)
        k += _WK[j] * fx
        g += _WG[j] * fx
        ra += _WK[j] * fabs(fx)
    P.k = half * k
    P.err = fabs(half * (k - g))
    P.resabs = fabs(half) * ra
    return 0


cdef inline bint _accept(Model *m, Panel *P, double tol, double total, double ref) noexcept nogil:
    cdef double width = P.b - P.a
    cdef double mid = fabs(0.5 * (P.a + P.b))
    cdef double share = width / total
    # rounding in dk = scale*tan(theta) is amplified near poles close to the axis
    cdef double cond = 1.0 + m.noise_poles * fabs(m.scale * tan(mid)) / m.noise_nearest
    if ref > 0:
        share += P.resabs / ref
    if mid < 1.0:
        mid = 1.0
    return (P.err <= 0.5 * tol * share
            or P.err <= ROUNDOFF_FACTOR * EPS * P.resabs * cond
            or width <= 64 * EPS * mid)


cdef int _push(Panel **buf, Py_ssize_t *n, Py_ssize_t *cap, Panel P) noexcept nogil:
    cdef Panel *tmp
    if n[0] == cap[0]:
        cap[0] = 2 * cap[0] + 16
        tmp = <Panel *> realloc(buf[0], cap[0] * sizeof(Panel))
        if tmp == NULL:
            return 1
        buf[0] = tmp
    buf[0][n[0]] = P
    n[0] += 1
    return 0


def spectral_panels(codes, powers, widths, double[::1] consts, double coef2, double scale,
                    seeds, double tol, long max_panels, double ref=0.0):
    """Panels of ``coef2 * |prod(k)|**2`` over the real line mapped by ``dk = scale*tan(theta)``."""
    cdef long[::1] c = np.ascontiguousarray(codes, dtype=np.int64)
    cdef long[::1] p = np.ascontiguousarray(powers, dtype=np.int64)
    cdef double[::1] w = np.ascontiguousarray(widths, dtype=np.float64)
    cdef double[::1] s = np.ascontiguousarray(seeds, dtype=np.float64)
    cdef Model m
    _fill_model(&m, c, p, w, consts)
    m.coef2 = coef2
    m.scale = scale
    poles, nearest = noise_model(codes, powers, widths, consts)
    m.noise_poles = poles
    m.noise_nearest = nearest if poles else 1.0

    cdef Py_ssize_t nseed = s.shape[0], i
    cdef double total = s[nseed - 1] - s[0]
    cdef Panel *stack = NULL
    cdef Panel *done = NULL
    cdef Py_ssize_t ns = 0, cs = 0, nd = 0, cd = 0
    cdef Panel P, L, R
    cdef long processed = 0
    cdef bint converged = True
    cdef int status = 0  # 1 pole, 2 memory
    cdef double seed_sum = 0.0

    with nogil:
        # seed panels pushed right-to-left so the leftmost is refined first
        i = nseed - 2
        while i >= 0:
            P.a = s[i]
            P.b = s[i + 1]
            if _gk(&m, &P):
                status = 1
                break
            processed += 1
            seed_sum += P.resabs
            if _push(&stack, &ns, &cs, P):
                status = 2
                break
            i -= 1
        if ref <= 0:
            ref = seed_sum
        while status == 0 and ns > 0:
            ns -= 1
            P = stack[ns]
            if processed > max_panels:
                converged = False
            if not converged or _accept(&m, &P, tol, total, ref):
                if _push(&done, &nd, &cd, P):
                    status = 2
                continue
            L.a = P.a
            L.b = 0.5 * (P.a + P.b)
            R.a = L.b
            R.b = P.b
            if _gk(&m, &L) or _gk(&m, &R):
                status = 1
                break
            processed += 2
            if _push(&stack, &ns, &cs, R) or _push(&stack, &ns, &cs, L):
                status = 2
                break

    try:
        if status == 1:
            raise PoleProximityError("evaluation point on a Rabi pole")
        if status == 2:
            raise MemoryError("panel stack allocation failed")
        a = np.empty(nd)
        b = np.empty(nd)
        val = np.empty(nd)
        err = np.empty(nd)
        for i in range(nd):
            a[i] = done[i].a
            b[i] = done[i].b
            val[i] = done[i].k
            err[i] = done[i].err
    finally:
        free(stack)
        free(done)
    return a, b, val, err, 15 * processed, converged
