"""Koenigs map h (h' f = 1, h(1) = 0), its Newton inverse and the complex-time
extension F_zeta = h^-1(h(z) + zeta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._backend import kernels
from .errors import DomainError, NewtonDiverged, QuadratureFailure
from .flow import DEFAULT_FLOW, FlowParams, evolve
from .generators import INEQ_SLACK, Generator, SampleGrid, _grid, evaluate

MAX_HALVINGS = 10          # continuation: smallest w-step is 2^-10 of the distance
DAMPING_HALVINGS = 30
DOMAIN_MARGIN = 1e-12


@dataclass(frozen=True)
class InversionParams:
    newton_tol: float = 1e-12
    max_iters: int = 60
    damping: float = 1.0

    def __post_init__(self):
        if not self.newton_tol > 0 or self.max_iters < 1:
            raise ValueError("newton_tol and max_iters must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


DEFAULT_INVERSION = InversionParams()


@dataclass(eq=False)
class KoenigsMap:
    """h(z) = integral of dw/f(w) over the segment [1, z]."""

    generator: Generator
    quad_tol: float = 1e-13
    cache: dict = field(default_factory=dict, repr=False)

    def _segment(self, a: complex, b: complex) -> complex:
        """Integral over [a, b], split geometrically from the end nearer the origin
        so that each piece is no longer than its distance from that end.
        """
        a, b = complex(a), complex(b)
        near, far, sign = (a, b, 1) if abs(a) <= abs(b) else (b, a, -1)
        length = abs(far - near)
        if length == 0.0:
            return 0j
        t = [0.0]
        step = max(abs(near), 1e-3) / length
        while t[-1] + step < 1.0:
            t.append(t[-1] + step)
            step *= 2.0
        t.append(1.0)
        prog = self.generator.program
        total = 0j
        for lo, hi in zip(t, t[1:]):
            status, value, _ = kernels.segment_integral(
                prog.code, prog.consts, near + lo * (far - near), near + hi * (far - near),
                self.quad_tol, 1e-3 * self.quad_tol)
            if status != _backend.STATUS_OK:
                raise QuadratureFailure(f"integral of 1/f over [{a}, {b}] did not meet tolerance")
            total += value
        return sign * total

    def h(self, z: complex) -> complex:
        z = complex(z)
        if not z.real > 0:
            raise DomainError(f"{z} is not in the right half-plane")
        key = (z.real, z.imag)
        hit = self.cache.get(key)
        if hit is None:
            hit = self.cache[key] = self._segment(1.0, z)
        return hit

    __call__ = h

    def h_prime(self, z: complex) -> complex:
        return 1.0 / self.generator.scalar(complex(z))

    def increment(self, z_from: complex, z_to: complex) -> complex:
        """h(z_to) - h(z_from) via the short segment between them."""
        return self._segment(z_from, z_to)


def _newton(m: KoenigsMap, z: complex, hz: complex, w: complex, params: InversionParams):
    """Damped Newton for h(z) = w using incremental quadrature; returns (z, h(z)) or None."""
    f = m.generator.scalar
    tol = params.newton_tol * (1 + abs(w))
    r = hz - w
    for _ in range(params.max_iters):
        if abs(r) <= tol:
            return z, hz
        step = -params.damping * r * f(z)
        for _ in range(DAMPING_HALVINGS):
            cand = z + step
            if cand.real > DOMAIN_MARGIN:
                try:
                    hc = hz + m.increment(z, cand)
                except QuadratureFailure:
                    hc = None
                if hc is not None and abs(hc - w) < abs(r):
                    break
            step *= 0.5
        else:
            return None
        z, hz, r = cand, hc, hc - w
    return (z, hz) if abs(r) <= tol else None


# start points for inversion without a hint; h(Pi) need not be convex, so the
# straight w-path from h(1) = 0 can leave it
_ANCHORS = [r * complex(math.cos(phi), math.sin(phi))
            for r in (0.1, 0.5, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0)
            for phi in np.linspace(-1.45, 1.45, 9)]
ANCHOR_TRIES = 6


def h_inverse(m: KoenigsMap, w: complex, params: InversionParams = DEFAULT_INVERSION,
              hint: complex | None = None) -> complex:
    """Solve h(z) = w by Newton continuation along the w-segment from h(hint).

    With a hint, failure to track the segment is the signal that w lies
    outside h(Pi).  Without one, the segment from h(1) is tried first and then
    segments from the anchors whose h-values lie nearest to w.
    """
    w = complex(w)
    if hint is not None:
        return _continue(m, w, complex(hint), params)
    try:
        return _continue(m, w, 1.0 + 0j, params)
    except NewtonDiverged as exc:
        first = exc
    anchors = sorted(_ANCHORS, key=lambda c: abs(m.h(c) - w))
    for c in anchors[:ANCHOR_TRIES]:
        try:
            return _continue(m, w, c, params)
        except NewtonDiverged:
            pass
    raise first


def _continue(m: KoenigsMap, w: complex, z: complex, params: InversionParams) -> complex:
    hz = m.h(z)
    total = w - hz
    done = 0.0
    frac = 1.0
    min_frac = 2.0 ** -MAX_HALVINGS
    f = m.generator.scalar
    while done < 1.0:
        frac = min(frac, 1.0 - done)
        target = hz + frac * total if done == 0 else w_done + frac * total
        pred = z + (target - hz) * f(z)            # Euler predictor, dz/dw = f
        start = (z, hz)
        if pred.real > DOMAIN_MARGIN:
            try:
                start = (pred, hz + m.increment(z, pred))
            except QuadratureFailure:
                pass
        res = _newton(m, start[0], start[1], target, params)
        if res is None:
            if frac <= min_frac:
                raise NewtonDiverged(f"continuation towards w={w} stalled at z={z} "
                                     f"({done:.6g} of the way)")
            frac *= 0.5
            continue
        z, hz = res
        w_done = target
        done += frac
        frac *= 2.0
    # polish against the directly computed h to remove accumulated increment error
    tol = params.newton_tol * (1 + abs(w))
    for _ in range(5):
        r = m.h(z) - w
        if abs(r) <= tol:
            return z
        cand = z - r * f(z)
        if not cand.real > DOMAIN_MARGIN:
            break
        z = cand
    if abs(m.h(z) - w) <= tol:
        return z
    raise NewtonDiverged(f"inverse at w={w} did not reach tolerance (residual {abs(m.h(z) - w):.3g})")


def abel_residual(m: KoenigsMap, z: complex, t: float, flow: FlowParams = DEFAULT_FLOW) -> float:
    """|h(F_t(z)) - h(z) - t|."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return abs(m.h(evolve(m.generator, z, t, 0.0, flow)) - m.h(z) - t)


def analytic_extension(m: KoenigsMap, z: complex, zeta: complex,
                       params: InversionParams = DEFAULT_INVERSION) -> complex:
    """F_zeta(z) = h^-1(h(z) + zeta), continued in zeta from z itself."""
    z = complex(z)
    if not z.real > 0:
        raise DomainError(f"{z} is not in the right half-plane")
    return h_inverse(m, m.h(z) + complex(zeta), params, hint=z)


def direction_escape(m: KoenigsMap, z: complex, theta: float, t: float = 1e3,
                     params: InversionParams = DEFAULT_INVERSION) -> float:
    """|h^-1(h(z) + t e^{i theta})|: finite-horizon witness of escape to infinity."""
    return abs(analytic_extension(m, z, t * complex(math.cos(theta), math.sin(theta)), params))


@dataclass
class ConvexityReport:
    theta: float
    min_value: float
    violations: list
    status: str  # "pass", "fail" or "boundary"


def convexity_direction_check(m: KoenigsMap, theta: float,
                              grid: SampleGrid | None = None) -> ConvexityReport:
    """Sample Re(e^{-i theta} h') = Re(e^{-i theta}/f); h is convex in direction
    e^{i theta} on the grid iff no value is negative.
    """
    if not -math.pi < theta <= math.pi:
        raise ValueError("theta must lie in (-pi, pi]")
    pts = _grid(grid).points
    vals = complex(math.cos(theta), -math.sin(theta)) / evaluate(m.generator, pts)
    re = vals.real
    slack = INEQ_SLACK * (1 + np.abs(vals))
    bad = re < -slack
    violations = [(complex(z), float(v)) for z, v in zip(pts[bad], re[bad])]
    if violations:
        status = "fail"
    elif np.any(re <= slack):
        status = "boundary"
    else:
        status = "pass"
    return ConvexityReport(theta, float(np.min(re)), violations, status)
