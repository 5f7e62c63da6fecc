"""Pure-Python kernels.  Mirrors ``_kernels.pyx`` line for line; selected
when the compiled extension is unavailable or ``HALFPLANE_PURE_PYTHON`` is set.
"""
import cmath
import math

import numpy as np

from .expr import (OP_ADD, OP_CONST, OP_DIV, OP_EXP, OP_IPOW, OP_LOG, OP_MUL,
                   OP_NEG, OP_POW, OP_SQRT, OP_SUB, OP_Z, integer_pow, principal_pow)

BACKEND = "python"

STATUS_OK = 0
STATUS_DOMAIN_EXIT = 1
STATUS_STEP_LIMIT = 2
STATUS_QUAD_FAIL = 3

# Dormand-Prince 5(4) tableau
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)

# Gauss-Kronrod 7/15
_XGK = (0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0)
_WGK = (0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714)
_WG = (0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
       0.381830050505118944950369775488975, 0.417959183673469387755102040816327)


def eval_program(code, consts, z):
    z = complex(z)
    stack = []
    push = stack.append
    pop = stack.pop
    for k in range(0, len(code), 2):
        op = code[k]
        if op == OP_Z:
            push(z)
        elif op == OP_CONST:
            push(complex(consts[code[k + 1]]))
        elif op == OP_NEG:
            push(-pop())
        elif op == OP_IPOW:
            push(integer_pow(pop(), int(code[k + 1])))
        elif op == OP_LOG:
            a = pop()
            push(cmath.log(a) if a != 0 else complex(-math.inf, 0.0))
        elif op == OP_EXP:
            try:
                push(cmath.exp(pop()))
            except OverflowError:
                push(complex(math.inf, math.inf))
        elif op == OP_SQRT:
            push(cmath.sqrt(pop()))
        else:
            b = pop()
            a = pop()
            if op == OP_ADD:
                push(a + b)
            elif op == OP_SUB:
                push(a - b)
            elif op == OP_MUL:
                push(a * b)
            elif op == OP_DIV:
                push(a / b if b != 0 else complex(math.inf, math.inf))
            elif op == OP_POW:
                try:
                    push(principal_pow(a, b))
                except OverflowError:
                    push(complex(math.inf, math.inf))
    return stack[0]


def _finite(w):
    return math.isfinite(w.real) and math.isfinite(w.imag)


def _rhs(code, consts, rot, u, margin):
    """rot * f(u), or None when u is outside {Re > margin} or f(u) is not finite."""
    if not (u.real > margin) or not _finite(u):
        return None
    try:
        w = rot * eval_program(code, consts, u)
    except (OverflowError, ZeroDivisionError, ValueError):
        return None
    return w if _finite(w) else None


def _trial_step(code, consts, rot, u, k1, h, margin):
    k2 = _rhs(code, consts, rot, u + h * (_A21 * k1), margin)
    if k2 is None:
        return None
    k3 = _rhs(code, consts, rot, u + h * (_A31 * k1 + _A32 * k2), margin)
    if k3 is None:
        return None
    k4 = _rhs(code, consts, rot, u + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), margin)
    if k4 is None:
        return None
    k5 = _rhs(code, consts, rot, u + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), margin)
    if k5 is None:
        return None
    k6 = _rhs(code, consts, rot,
              u + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), margin)
    if k6 is None:
        return None
    unew = u + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    k7 = _rhs(code, consts, rot, unew, margin)
    if k7 is None:
        return None
    errv = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
    return unew, k7, errv


def dopri(code, consts, rot, z0, times, rtol, atol, max_step, max_steps, margin):
    """Integrate du/ds = rot*f(u), u(0)=z0 and record u at each entry of ``times``.

    ``times`` must be non-decreasing and non-negative.  Returns
    ``(status, samples, exit_s, exit_u, steps)``.
    """
    rot = complex(rot)
    u = complex(z0)
    times = np.asarray(times, dtype=float)
    out = np.empty(len(times), dtype=np.complex128)
    k1 = _rhs(code, consts, rot, u, margin)
    if k1 is None:
        return STATUS_DOMAIN_EXIT, out, 0.0, u, 0
    t = 0.0
    t_end = float(times[-1]) if len(times) else 0.0
    d0 = max(abs(u), 1e-5)
    d1 = max(abs(k1), 1e-10)
    h = min(max_step, 0.01 * d0 / d1, t_end if t_end > 0 else 1.0)
    steps = 0
    idx = 0
    while idx < len(times) and times[idx] <= t:
        out[idx] = u
        idx += 1
    while idx < len(times):
        target = float(times[idx])
        hmin = 1e-14 * max(1.0, abs(t))
        step = min(h, target - t)
        last = step >= target - t
        if steps >= max_steps:
            return STATUS_STEP_LIMIT, out, t, u, steps
        steps += 1
        trial = _trial_step(code, consts, rot, u, k1, step, margin)
        if trial is None:
            # a stage left the half-plane: shrink and retry
            if step <= hmin:
                return STATUS_DOMAIN_EXIT, out, t, u, steps
            h = 0.5 * step
            continue
        unew, k7, errv = trial
        scale = atol + rtol * max(abs(u), abs(unew))
        err = abs(errv) / scale
        if err <= 1.0:
            t = target if last else t + step
            u = unew
            k1 = k7
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not last or step >= h:
                h = min(max_step, step * fac)
            while idx < len(times) and times[idx] <= t:
                out[idx] = u
                idx += 1
        else:
            if step <= hmin:
                return STATUS_STEP_LIMIT, out, t, u, steps
            h = step * max(0.2, 0.9 * err ** -0.2)
    return STATUS_OK, out, t, u, steps


def _gk15(code, consts, a, d, lo, hi):
    """Kronrod and Gauss estimates of the integral of d/f(a + s d) over s in [lo, hi]."""
    c = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    fc = 1.0 / eval_program(code, consts, a + c * d)
    resk = _WGK[7] * fc
    resg = _WG[3] * fc
    for j in range(7):
        dx = half * _XGK[j]
        f1 = 1.0 / eval_program(code, consts, a + (c - dx) * d)
        f2 = 1.0 / eval_program(code, consts, a + (c + dx) * d)
        resk += _WGK[j] * (f1 + f2)
        if j & 1:
            resg += _WG[j >> 1] * (f1 + f2)
    return resk * half * d, resg * half * d


def segment_integral(code, consts, a, b, rtol, atol, max_panels=4000):
    """Adaptive Gauss-Kronrod integral of dw/f(w) over the straight segment [a, b].

    Returns ``(status, value, error_estimate)``.
    """
    a = complex(a)
    d = complex(b) - a
    if d == 0:
        return STATUS_OK, 0j, 0.0
    try:
        k, g = _gk15(code, consts, a, d, 0.0, 1.0)
    except (ZeroDivisionError, OverflowError, ValueError):
        return STATUS_QUAD_FAIL, 0j, math.inf
    if not _finite(k):
        return STATUS_QUAD_FAIL, k, math.inf
    tol = max(atol, rtol * abs(k))
    total = 0j
    err_total = 0.0
    stack = [(0.0, 1.0, k, g)]
    panels = 1
    while stack:
        lo, hi, k, g = stack.pop()
        err = abs(k - g)
        if err <= tol * (hi - lo) or hi - lo < 1e-15:
            total += k
            err_total += err
            continue
        panels += 2
        if panels > max_panels:
            return STATUS_QUAD_FAIL, total, math.inf
        mid = 0.5 * (lo + hi)
        try:
            kl, gl = _gk15(code, consts, a, d, lo, mid)
            kr, gr = _gk15(code, consts, a, d, mid, hi)
        except (ZeroDivisionError, OverflowError, ValueError):
            return STATUS_QUAD_FAIL, total, math.inf
        if not (_finite(kl) and _finite(kr)):
            return STATUS_QUAD_FAIL, total, math.inf
        stack.append((mid, hi, kr, gr))
        stack.append((lo, mid, kl, gl))
    return STATUS_OK, total, err_total
