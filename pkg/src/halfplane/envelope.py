"""Localization of trajectories: the region between B1 and B2 that every
trajectory F_t(z0), t >= 0, stays in, built from argument envelopes of f.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEnvelope, PreconditionFailed
from .flow import Trajectory
from .generators import HALF_PI, Generator, SampleGrid, arg_envelope


@dataclass(frozen=True, eq=False)
class EnvelopeBound:
    z0: complex
    u_grid: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    quadrature_slack: np.ndarray  # left minus right Riemann sums of the slope bounds, per side
    signed: bool = True

    def at(self, u):
        """Linear interpolation of (B1, B2); exact for the piecewise-linear bounds."""
        return np.interp(u, self.u_grid, self.B1), np.interp(u, self.u_grid, self.B2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("u,B1,B2\n")
        for u, b1, b2 in zip(self.u_grid, self.B1, self.B2):
            buf.write(f"{u:.17g},{b1:.17g},{b2:.17g}\n")
        return buf.getvalue()


def envelope_bounds(g: Generator, z0: complex, u_max: float, n: int = 101,
                    grid: SampleGrid | None = None, signed: bool = True) -> EnvelopeBound:
    """B1, B2 on n knots of [Re z0, u_max].

    Between knots the slope bound is the one at the left knot, which is the
    sup/inf of arg f over the whole sub-half-plane to its right and so only
    widens the region.  With ``signed`` the slopes are tan(inf arg f) and
    tan(sup arg f); otherwise -tan(gamma1) and tan(gamma2).
    """
    z0 = complex(z0)
    if not z0.real > 0:
        raise PreconditionFailed("z0 must lie in the right half-plane")
    if not u_max > z0.real:
        raise PreconditionFailed("u_max must exceed Re z0")
    if n < 2:
        raise ValueError("n must be >= 2")
    u = np.linspace(z0.real, float(u_max), n)
    lo_slope = np.empty(n)
    hi_slope = np.empty(n)
    for j in range(n):
        env = arg_envelope(g, float(u[j]), grid)
        if env.degenerate:
            raise DegenerateEnvelope(f"|arg f| reaches pi/2 on Re z >= {u[j]:.6g}")
        lo, hi = (env.lo, env.hi) if signed else (-env.gamma1, env.gamma2)
        lo_slope[j] = math.tan(lo)
        hi_slope[j] = math.tan(hi)
    du = np.diff(u)
    B1 = z0.imag + np.concatenate(([0.0], np.cumsum(du * lo_slope[:-1])))
    B2 = z0.imag + np.concatenate(([0.0], np.cumsum(du * hi_slope[:-1])))
    gap = np.maximum(np.abs(np.diff(lo_slope)), np.abs(np.diff(hi_slope)))
    slack = np.concatenate(([0.0], np.cumsum(du * gap)))
    return EnvelopeBound(z0, u, B1, B2, slack, signed)


@dataclass
class ContainmentReport:
    violations: list  # (t, z, B1(u), B2(u))
    n_samples: int
    max_excess: float

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_containment(bound: EnvelopeBound, traj: Trajectory, tol: float = 1e-9) -> ContainmentReport:
    """Check B1(u) - tol <= v <= B2(u) + tol for every sample u + iv of the trajectory."""
    u = traj.z.real
    v = traj.z.imag
    b1, b2 = bound.at(u)
    scale = tol * (1 + np.abs(v))
    below = np.maximum(b1 - v, 0.0)
    above = np.maximum(v - b2, 0.0)
    off_left = u < bound.u_grid[0] - scale
    off_right = u > bound.u_grid[-1] + scale
    bad = (below > scale) | (above > scale) | off_left | off_right
    violations = [(float(t), complex(z), float(lo), float(hi))
                  for t, z, lo, hi in zip(traj.t[bad], traj.z[bad], b1[bad], b2[bad])]
    return ContainmentReport(violations, len(u), float(np.max(np.maximum(below, above), initial=0.0)))


def moebius_threshold(a: float, b: float, eps: float) -> float:
    """Smallest k past which (z+a)/(z+b) restricted to Re z > k has |arg f| <= eps.

    Exactly sin(gamma(k)) = (b-a)/(2k+a+b); the threshold is clamped at 0.
    """
    if not 0.0 <= a < b:
        raise PreconditionFailed(f"need 0 <= a < b, got a={a}, b={b}")
    if not 0.0 < eps < HALF_PI:
        raise PreconditionFailed("eps must lie in (0, pi/2)")
    s = math.sin(eps)
    return max(0.0, (b - a - (a + b) * s) / (2 * s))


exam3_threshold = moebius_threshold  # name used by the operation contract


def moebius_gamma(a: float, b: float, x) -> np.ndarray:
    """Exact sup |arg f| on the line Re z = x for f = (z+a)/(z+b)."""
    x = np.asarray(x, dtype=float)
    return np.arctan((b - a) / (2 * np.sqrt((x + a) * (x + b))))


def moebius_log_bound(a: float, b: float, z: complex, F: complex) -> float:
    """Closed-form bound on |Im F_t(z) - Im z| in terms of Re F_t(z) for (z+a)/(z+b)."""
    def anchor(x):
        return 0.5 * (a + b) + x + math.sqrt((x + a) * (x + b))

    return 0.5 * (b - a) * math.log(anchor(complex(F).real) / anchor(complex(z).real))
