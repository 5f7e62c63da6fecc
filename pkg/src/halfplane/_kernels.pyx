# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: stack-program evaluation, Dormand-Prince 5(4) stepping
and adaptive Gauss-Kronrod segment quadrature.  ``_fallback.py`` is the
pure-Python twin and must stay behaviourally identical.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, fmax, fmin, pow as cpow_real, isfinite, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex clog(double complex)
    double complex csqrt(double complex)
    double cabs(double complex)
    double creal(double complex)
    double cimag(double complex)

BACKEND = "cython"

cdef enum:
    OP_Z = 0
    OP_CONST = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POW = 6
    OP_NEG = 7
    OP_LOG = 8
    OP_EXP = 9
    OP_SQRT = 10
    OP_IPOW = 11

cdef enum:
    S_OK = 0
    S_DOMAIN_EXIT = 1
    S_STEP_LIMIT = 2
    S_QUAD_FAIL = 3

STATUS_OK = S_OK
STATUS_DOMAIN_EXIT = S_DOMAIN_EXIT
STATUS_STEP_LIMIT = S_STEP_LIMIT
STATUS_QUAD_FAIL = S_QUAD_FAIL

cdef double _A21 = 1.0 / 5
cdef double _A31 = 3.0 / 40, _A32 = 9.0 / 40
cdef double _A41 = 44.0 / 45, _A42 = -56.0 / 15, _A43 = 32.0 / 9
cdef double _A51 = 19372.0 / 6561, _A52 = -25360.0 / 2187, _A53 = 64448.0 / 6561, _A54 = -212.0 / 729
cdef double _A61 = 9017.0 / 3168, _A62 = -355.0 / 33, _A63 = 46732.0 / 5247, _A64 = 49.0 / 176
cdef double _A65 = -5103.0 / 18656
cdef double _B1 = 35.0 / 384, _B3 = 500.0 / 1113, _B4 = 125.0 / 192, _B5 = -2187.0 / 6784
cdef double _B6 = 11.0 / 84
cdef double _E1 = 71.0 / 57600, _E3 = -71.0 / 16695, _E4 = 71.0 / 1920
cdef double _E5 = -17253.0 / 339200, _E6 = 22.0 / 525, _E7 = -1.0 / 40

cdef double[8] _XGK = [0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                       0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                       0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                       0.207784955007898467600689403773245, 0.0]
cdef double[8] _WGK = [0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                       0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                       0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                       0.204432940075298892414161999234649, 0.209482141084727828012999174891714]
cdef double[4] _WG = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                      0.381830050505118944950369775488975, 0.417959183673469387755102040816327]


cdef struct Prog:
    const long long* code
    Py_ssize_t n
    const double complex* consts
    double complex* stack


cdef inline bint _finite(double complex w) nogil:
    return isfinite(creal(w)) and isfinite(cimag(w))


cdef inline double complex _ipow(double complex base, long long n) nogil:
    cdef double complex result = 1.0
    cdef double complex b = base
    cdef long long m = n if n >= 0 else -n
    while m:
        if m & 1:
            result = result * b
        b = b * b
        m >>= 1
    if n < 0:
        return 1.0 / result
    return result


cdef double complex _eval(Prog* p, double complex z) nogil:
    cdef Py_ssize_t k, top = 0
    cdef long long op
    cdef double complex a, b
    cdef double complex* st = p.stack
    for k in range(0, p.n, 2):
        op = p.code[k]
        if op == OP_Z:
            st[top] = z
            top += 1
        elif op == OP_CONST:
            st[top] = p.consts[p.code[k + 1]]
            top += 1
        elif op == OP_NEG:
            st[top - 1] = -st[top - 1]
        elif op == OP_IPOW:
            st[top - 1] = _ipow(st[top - 1], p.code[k + 1])
        elif op == OP_LOG:
            a = st[top - 1]
            if a == 0:
                st[top - 1] = -INFINITY
            else:
                st[top - 1] = clog(a)
        elif op == OP_EXP:
            st[top - 1] = cexp(st[top - 1])
        elif op == OP_SQRT:
            st[top - 1] = csqrt(st[top - 1])
        else:
            b = st[top - 1]
            a = st[top - 2]
            top -= 1
            if op == OP_ADD:
                st[top - 1] = a + b
            elif op == OP_SUB:
                st[top - 1] = a - b
            elif op == OP_MUL:
                st[top - 1] = a * b
            elif op == OP_DIV:
                if b == 0:
                    st[top - 1] = INFINITY + INFINITY * 1j
                else:
                    st[top - 1] = a / b
            elif op == OP_POW:
                if a == 0:
                    st[top - 1] = 0.0 if creal(b) > 0 else INFINITY
                else:
                    st[top - 1] = cexp(b * clog(a))
    return st[0]


cdef int _setup(Prog* p, cnp.int64_t[::1] code, double complex[::1] consts) except -1:
    p.n = code.shape[0]
    p.code = <const long long*> &code[0]
    p.consts = <const double complex*> (&consts[0] if consts.shape[0] > 0 else NULL)
    p.stack = <double complex*> malloc(sizeof(double complex) * (p.n // 2 + 1))
    if p.stack == NULL:
        raise MemoryError()
    return 0


def _as_code(code):
    return np.ascontiguousarray(code, dtype=np.int64)


def _as_consts(consts):
    c = np.ascontiguousarray(consts, dtype=np.complex128)
    if c.shape[0] == 0:
        c = np.zeros(1, dtype=np.complex128)
    return c


def eval_program(code, consts, z):
    cdef Prog p
    cdef double complex w
    _setup(&p, _as_code(code), _as_consts(consts))
    try:
        w = _eval(&p, <double complex> complex(z))
    finally:
        free(p.stack)
    return complex(w)


cdef inline bint _rhs(Prog* p, double complex rot, double complex u, double margin,
                      double complex* out) nogil:
    if not (creal(u) > margin) or not _finite(u):
        return False
    out[0] = rot * _eval(p, u)
    return _finite(out[0])


cdef bint _trial_step(Prog* p, double complex rot, double complex u, double complex k1,
                      double h, double margin, double complex* unew, double complex* k7,
                      double complex* errv) nogil:
    cdef double complex k2, k3, k4, k5, k6
    if not _rhs(p, rot, u + h * (_A21 * k1), margin, &k2):
        return False
    if not _rhs(p, rot, u + h * (_A31 * k1 + _A32 * k2), margin, &k3):
        return False
    if not _rhs(p, rot, u + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), margin, &k4):
        return False
    if not _rhs(p, rot, u + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), margin, &k5):
        return False
    if not _rhs(p, rot, u + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
                margin, &k6):
        return False
    unew[0] = u + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    if not _rhs(p, rot, unew[0], margin, k7):
        return False
    errv[0] = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7[0])
    return True


def dopri(code, consts, rot, z0, times, double rtol, double atol, double max_step,
          long long max_steps, double margin):
    """Integrate du/ds = rot*f(u), u(0)=z0, recording u at each of ``times``.

    Returns ``(status, samples, exit_s, exit_u, steps)``.
    """
    cdef Prog p
    cdef double[::1] ts = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t nt = ts.shape[0], idx = 0
    out_arr = np.empty(nt, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex crot = <double complex> complex(rot)
    cdef double complex u = <double complex> complex(z0)
    cdef double complex k1, unew, k7, errv
    cdef double t = 0.0, t_end, h, step, target, hmin, err, fac, scale
    cdef bint last
    cdef long long steps = 0
    cdef int status = S_OK
    _setup(&p, _as_code(code), _as_consts(consts))
    try:
        with nogil:
            if not _rhs(&p, crot, u, margin, &k1):
                status = S_DOMAIN_EXIT
            else:
                t_end = ts[nt - 1] if nt > 0 else 0.0
                h = fmin(max_step, 0.01 * fmax(cabs(u), 1e-5) / fmax(cabs(k1), 1e-10))
                h = fmin(h, t_end if t_end > 0 else 1.0)
                while idx < nt and ts[idx] <= t:
                    out[idx] = u
                    idx += 1
                while idx < nt:
                    target = ts[idx]
                    hmin = 1e-14 * fmax(1.0, fabs(t))
                    step = fmin(h, target - t)
                    last = step >= target - t
                    if steps >= max_steps:
                        status = S_STEP_LIMIT
                        break
                    steps += 1
                    if not _trial_step(&p, crot, u, k1, step, margin, &unew, &k7, &errv):
                        if step <= hmin:
                            status = S_DOMAIN_EXIT
                            break
                        h = 0.5 * step
                        continue
                    scale = atol + rtol * fmax(cabs(u), cabs(unew))
                    err = cabs(errv) / scale
                    if err <= 1.0:
                        t = target if last else t + step
                        u = unew
                        k1 = k7
                        if err == 0.0:
                            fac = 5.0
                        else:
                            fac = fmin(5.0, fmax(0.2, 0.9 * cpow_real(err, -0.2)))
                        if not last or step >= h:
                            h = fmin(max_step, step * fac)
                        while idx < nt and ts[idx] <= t:
                            out[idx] = u
                            idx += 1
                    else:
                        if step <= hmin:
                            status = S_STEP_LIMIT
                            break
                        h = step * fmax(0.2, 0.9 * cpow_real(err, -0.2))
    finally:
        free(p.stack)
    return status, out_arr, t, complex(u), steps


cdef bint _gk15(Prog* p, double complex a, double complex d, double lo, double hi,
                double complex* resk_out, double complex* resg_out) nogil:
    cdef double c = 0.5 * (lo + hi)
    cdef double half = 0.5 * (hi - lo)
    cdef double complex fc, f1, f2, resk, resg
    cdef double dx
    cdef int j
    fc = _eval(p, a + c * d)
    if fc == 0:
        return False
    fc = 1.0 / fc
    resk = _WGK[7] * fc
    resg = _WG[3] * fc
    for j in range(7):
        dx = half * _XGK[j]
        f1 = _eval(p, a + (c - dx) * d)
        f2 = _eval(p, a + (c + dx) * d)
        if f1 == 0 or f2 == 0:
            return False
        f1 = 1.0 / f1
        f2 = 1.0 / f2
        resk = resk + _WGK[j] * (f1 + f2)
        if j & 1:
            resg = resg + _WG[j >> 1] * (f1 + f2)
    resk_out[0] = resk * half * d
    resg_out[0] = resg * half * d
    return _finite(resk_out[0]) and _finite(resg_out[0])


def segment_integral(code, consts, a, b, double rtol, double atol, int max_panels=4000):
    """Adaptive Gauss-Kronrod integral of dw/f(w) over the segment [a, b].

    Returns ``(status, value, error_estimate)``.
    """
    cdef Prog p
    cdef double complex ca = <double complex> complex(a)
    cdef double complex d = <double complex> complex(b) - ca
    cdef double complex k, g, kl, gl, kr, gr, total = 0
    cdef double tol, err, err_total = 0.0, lo, hi, mid
    cdef int status = S_OK, panels = 1, top = 0
    cdef int cap = max_panels + 2
    cdef double* st_lo
    cdef double* st_hi
    cdef double complex* st_k
    cdef double complex* st_g
    if d == 0:
        return S_OK, 0j, 0.0
    _setup(&p, _as_code(code), _as_consts(consts))
    st_lo = <double*> malloc(sizeof(double) * cap)
    st_hi = <double*> malloc(sizeof(double) * cap)
    st_k = <double complex*> malloc(sizeof(double complex) * cap)
    st_g = <double complex*> malloc(sizeof(double complex) * cap)
    try:
        if st_lo == NULL or st_hi == NULL or st_k == NULL or st_g == NULL:
            raise MemoryError()
        with nogil:
            if not _gk15(&p, ca, d, 0.0, 1.0, &k, &g):
                status = S_QUAD_FAIL
                err_total = INFINITY
            else:
                tol = fmax(atol, rtol * cabs(k))
                st_lo[0] = 0.0
                st_hi[0] = 1.0
                st_k[0] = k
                st_g[0] = g
                top = 1
                while top > 0:
                    top -= 1
                    lo = st_lo[top]
                    hi = st_hi[top]
                    k = st_k[top]
                    g = st_g[top]
                    err = cabs(k - g)
                    if err <= tol * (hi - lo) or hi - lo < 1e-15:
                        total = total + k
                        err_total += err
                        continue
                    panels += 2
                    if panels > max_panels:
                        status = S_QUAD_FAIL
                        err_total = INFINITY
                        break
                    mid = 0.5 * (lo + hi)
                    if not (_gk15(&p, ca, d, lo, mid, &kl, &gl) and _gk15(&p, ca, d, mid, hi, &kr, &gr)):
                        status = S_QUAD_FAIL
                        err_total = INFINITY
                        break
                    st_lo[top] = mid
                    st_hi[top] = hi
                    st_k[top] = kr
                    st_g[top] = gr
                    top += 1
                    st_lo[top] = lo
                    st_hi[top] = mid
                    st_k[top] = kl
                    st_g[top] = gl
                    top += 1
    finally:
        free(p.stack)
        free(st_lo)
        free(st_hi)
        free(st_k)
        free(st_g)
    return status, complex(total), err_total
