"""Infinitesimal generators on the right half-plane and their pointwise checks.

A :class:`Generator` wraps an expression tree compiled to a stack program.
Catalog forms (affine, power, moebius, classg) additionally carry their
parameters and, where one exists, a closed-form flow oracle.
"""
from __future__ import annotations

import cmath
import enum
import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Optional

import numpy as np

from . import expr as _expr
from ._backend import kernels
from .errors import (DegenerateEnvelope, DomainError, NotConverged, NumericOverflow,
                     OutOfRangeParameter, ParseError, PreconditionFailed)

KINDS = ("affine", "power", "moebius", "classg", "expr")

HALF_PI = 0.5 * math.pi
INEQ_SLACK = 1e-10
DEGENERATE_MARGIN = 1e-6
ZERO_LIMIT = 1e-8
DEFAULT_RADII = 100.0 * 2.0 ** np.arange(9)


@dataclass(frozen=True, eq=False)
class Generator:
    kind: str
    params: MappingProxyType
    ast: tuple
    program: _expr.Program = field(repr=False)
    oracle: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, z):
        """Evaluate f on a scalar or array without domain checks."""
        out = _expr.eval_array(self.program, np.atleast_1d(z))
        return complex(out[0]) if np.ndim(z) == 0 else out

    def scalar(self, z: complex) -> complex:
        return kernels.eval_program(self.program.code, self.program.consts, z)

    def to_spec(self) -> str:
        p = self.params
        if self.kind == "affine":
            return f"affine: A={_param_text(p['A'])}"
        if self.kind == "power":
            return f"power: alpha={p['alpha']!r}"
        if self.kind == "moebius":
            return f"moebius: a={p['a']!r}, b={p['b']!r}"
        if self.kind == "classg":
            return (f"classg: alpha={p['alpha']!r}, A={_param_text(p['A'])}, "
                    f"rho={_expr.to_text(p['rho'])}")
        return f"expr: {_expr.to_text(self.ast)}"

    def __str__(self):
        return self.to_spec()

    def shifted(self, k: float) -> "Generator":
        """Generator of the restricted semigroup, z -> f(z + k)."""
        return expression(_expr.substitute_z(self.ast, ("add", ("z",), ("const", complex(k)))))

    def scaled(self, c: complex) -> "Generator":
        """Generator c*f; for c = e^{i theta} this drives the flow along a ray."""
        return expression(("mul", ("const", complex(c)), self.ast))


def _param_text(c: complex) -> str:
    s = _expr.format_number(c)
    if s.startswith("(") and s.endswith(")") and not s.startswith("(-"):
        return s[1:-1]
    return s


def _make(kind, params, ast, oracle=None) -> Generator:
    return Generator(kind, MappingProxyType(dict(params)), ast, _expr.compile_ast(ast), oracle)


# -- catalog -----------------------------------------------------------------

def affine(A: complex) -> Generator:
    """Constant generator f = A; flow z + A*zeta."""
    A = complex(A)
    if A == 0:
        raise OutOfRangeParameter("the zero function generates the trivial semigroup")

    def oracle(t, theta, z):
        return _scalar_or_array(np.asarray(z, dtype=complex) + A * t * np.exp(1j * theta))

    return _make("affine", {"A": A}, ("const", A), oracle)


def power(alpha: float) -> Generator:
    """f(z) = z^(1-alpha), 0 < alpha < 1; flow (alpha*zeta + z^alpha)^(1/alpha)."""
    alpha = _real_param("alpha", alpha)
    if not 0.0 < alpha < 1.0:
        raise OutOfRangeParameter(f"power generator needs alpha in (0, 1), got {alpha}")

    def oracle(t, theta, z):
        z = np.asarray(z, dtype=complex)
        zeta = t * np.exp(1j * theta)
        return _scalar_or_array(_pow(alpha * zeta + _pow(z, alpha), 1.0 / alpha))

    return _make("power", {"alpha": alpha}, ("pow", ("z",), ("const", complex(1.0 - alpha))), oracle)


def moebius(a: float, b: float) -> Generator:
    """f(z) = (z + a)/(z + b), 0 <= a < b.

    The flow has no closed form; its oracle solves
    F + (b-a) log(F+a) = zeta + z + (b-a) log(z+a) by Newton continuation.
    """
    a = _real_param("a", a)
    b = _real_param("b", b)
    if not (0.0 <= a < b):
        raise OutOfRangeParameter(f"moebius generator needs 0 <= a < b, got a={a}, b={b}")

    def oracle(t, theta, z):
        zeta = t * np.exp(1j * theta)
        zs = np.asarray(z, dtype=complex)
        flat = [moebius_flow_solve(a, b, complex(w), zeta) for w in zs.ravel()]
        return _scalar_or_array(np.asarray(flat, dtype=complex).reshape(zs.shape))

    ast = ("div", ("add", ("z",), ("const", complex(a))), ("add", ("z",), ("const", complex(b))))
    return _make("moebius", {"a": a, "b": b}, ast, oracle)


def class_g(alpha: float, A: complex, rho="0") -> Generator:
    """f(z) = A (z+1)^(1-alpha) + rho(z) with rho an expression in z."""
    alpha = _real_param("alpha", alpha)
    A = complex(A)
    if not 0.0 < alpha < 2.0:
        raise OutOfRangeParameter(f"classg needs alpha in (0, 2), got {alpha}")
    if A == 0:
        raise OutOfRangeParameter("classg needs A != 0")
    rho_ast = _expr.parse_expression(rho) if isinstance(rho, str) else rho
    main = ("mul", ("const", A), ("pow", ("add", ("z",), ("const", 1 + 0j)), ("const", complex(1 - alpha))))
    return _make("classg", {"alpha": alpha, "A": A, "rho": rho_ast}, ("add", main, rho_ast))


def expression(source) -> Generator:
    """Generator from expression text or an already-parsed tree."""
    ast = _expr.parse_expression(source) if isinstance(source, str) else source
    return _make("expr", {}, ast)


def _real_param(name, value) -> float:
    c = complex(value)
    if c.imag != 0.0:
        raise OutOfRangeParameter(f"parameter {name} must be real, got {value}")
    return c.real


def _scalar_or_array(a):
    return complex(a) if np.ndim(a) == 0 else a


def _pow(base, expo):
    base = np.asarray(base, dtype=complex)
    with np.errstate(all="ignore"):
        return np.where(base == 0, 0j, np.exp(expo * np.log(np.where(base == 0, 1, base))))


def moebius_flow_solve(a, b, z, zeta, tol=1e-14, max_iters=50):
    """F_zeta(z) for f = (z+a)/(z+b) from the transcendental flow equation."""
    c = b - a
    rhs = zeta + z + c * cmath.log(z + a)

    def residual(F):
        return F + c * cmath.log(F + a) - rhs

    F = complex(z)
    done = 0j
    step = complex(zeta)
    subdivisions = 0
    while True:
        target = done + step
        rhs_s = target + z + c * cmath.log(z + a)
        # Euler predictor, then Newton on the partial equation
        G = F + step * (F + a) / (F + b)
        ok = False
        for _ in range(max_iters):
            if not (G + a).real > 0:
                break
            r = G + c * cmath.log(G + a) - rhs_s
            G_new = G - r / (1 + c / (G + a))
            if abs(G_new - G) <= tol * (1 + abs(G_new)):
                G = G_new
                ok = (G + a).real > 0
                break
            G = G_new
        if ok:
            F = G
            done = target
            if abs(done - zeta) <= 1e-15 * (1 + abs(zeta)):
                break
            step = min(2 * step, zeta - done, key=abs)
        else:
            subdivisions += 1
            if subdivisions > 60:
                raise NotConverged("moebius flow equation: continuation failed")
            step = step / 2
    if abs(residual(F)) > 1e-10 * (1 + abs(F)):
        raise NotConverged("moebius flow equation residual too large")
    return F


# -- parsing -----------------------------------------------------------------

_KIND_RE = re.compile(r"\s*([A-Za-z_]\w*)\s*:")
_PARAMS = {
    "affine": (("A",), ()),
    "power": (("alpha",), ()),
    "moebius": (("a", "b"), ()),
    "classg": (("alpha", "A"), ("rho",)),
}


def parse_generator(spec: str) -> Generator:
    """Parse ``kind: name=value, ...`` or ``expr: <expression>`` into a Generator."""
    m = _KIND_RE.match(spec)
    if not m:
        word = re.match(r"\s*([A-Za-z_]\w*)\s*", spec)
        if word and word.group(1).lower() in KINDS:
            raise ParseError("expected ':' after the generator kind", word.end(), (":",))
        pos = len(spec) - len(spec.lstrip())
        raise ParseError("expected '<kind>:'", pos, KINDS)
    kind = m.group(1).lower()
    offset = m.end()
    if kind == "expr":
        return expression(_expr.parse_expression(spec[offset:], offset))
    if kind not in _PARAMS:
        raise ParseError(f"unknown generator kind {m.group(1)!r}", m.start(1), KINDS)
    required, optional = _PARAMS[kind]
    values = _parse_params(spec, offset, required + optional)
    missing = [name for name in required if name not in values]
    if missing:
        raise ParseError(f"missing parameter {missing[0]!r}", len(spec), missing)

    def const(name):
        node, pos = values[name]
        if _expr.uses_z(node):
            raise ParseError(f"parameter {name!r} must not depend on z", pos, ("number",))
        return _expr.eval_constant(node)

    if kind == "affine":
        return affine(const("A"))
    if kind == "power":
        return power(const("alpha"))
    if kind == "moebius":
        return moebius(const("a"), const("b"))
    rho = values["rho"][0] if "rho" in values else ("const", 0j)
    return class_g(const("alpha"), const("A"), rho)


def _parse_params(spec, offset, allowed):
    p = _expr._Parser(_expr.tokenize(spec[offset:], offset))
    values = {}
    while True:
        t = p.tok
        if t.kind != "ident":
            p.fail(allowed)
        if t.value not in allowed:
            raise ParseError(f"unknown parameter {t.value!r}", t.pos, allowed)
        if t.value in values:
            raise ParseError(f"duplicate parameter {t.value!r}", t.pos, allowed)
        p.advance()
        p.expect_op("=")
        pos = p.tok.pos
        values[t.value] = (p.expression(), pos)
        if p.tok.kind == "eof":
            return values
        p.expect_op(",")


# -- evaluation --------------------------------------------------------------

def evaluate(g: Generator, z):
    """f(z) with domain and overflow checks; accepts scalars or arrays."""
    za = np.asarray(z, dtype=complex)
    if np.any(~(za.real > 0)):
        raise DomainError("evaluation point outside the right half-plane")
    w = g(za) if za.ndim else g(complex(za))
    if not np.all(np.isfinite(w)):
        raise NumericOverflow(f"generator value not finite at {z!r}")
    return w


# -- grids -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Tensor grid of sample points re + i*im in the half-plane."""

    re_values: np.ndarray
    im_values: np.ndarray

    def __post_init__(self):
        re_v = np.asarray(self.re_values, dtype=float)
        im_v = np.asarray(self.im_values, dtype=float)
        if re_v.size == 0 or im_v.size == 0:
            raise DomainError("empty sample grid")
        if np.any(~(re_v > 0)):
            raise DomainError("sample grid has points with Re z <= 0")
        object.__setattr__(self, "re_values", re_v)
        object.__setattr__(self, "im_values", im_v)

    @classmethod
    def default(cls, k: float = 0.0, n_re: int = 64, n_im: int = 65,
                re_span=(1e-3, 1e4), im_max: float = 1e4) -> "SampleGrid":
        """Log-spaced real parts from k, tan-spaced imaginary parts.

        For k > 0 the line Re z = k itself is included so that sup/inf over
        {Re z >= k} are sampled at their edge.
        """
        re_v = k + np.logspace(math.log10(re_span[0]), math.log10(re_span[1]), n_re)
        if k > 0:
            re_v = np.concatenate(([k], re_v[:-1]))
        u = math.atan(im_max)
        im_v = np.tan(np.linspace(-u, u, n_im))
        if n_im % 2:
            im_v[n_im // 2] = 0.0
        return cls(re_v, im_v)

    @property
    def points(self) -> np.ndarray:
        return (self.re_values[None, :] + 1j * self.im_values[:, None]).ravel()

    def restricted(self, k: float) -> "SampleGrid":
        """Sub-grid with Re z >= k (nested for increasing k)."""
        keep = self.re_values >= k
        if not np.any(keep):
            raise DomainError(f"no grid points with Re z >= {k}")
        return SampleGrid(self.re_values[keep], self.im_values)


def _grid(grid, k=0.0):
    return SampleGrid.default(k) if grid is None else grid


# -- validity checks ---------------------------------------------------------

@dataclass
class InequalityReport:
    violations: list
    n_points: int
    extreme: float  # min Re f for the range check, max(lhs - rhs) for flow invariance

    @property
    def ok(self) -> bool:
        return not self.violations


def flow_invariance_sides(g: Generator, z):
    """Both sides of the flow-invariance inequality lhs <= rhs at z."""
    z = np.asarray(z, dtype=complex)
    f1 = g.scalar(1.0)
    zc = np.conj(z)
    with np.errstate(all="ignore"):
        lhs = np.real(evaluate(g, z) * (zc - 1) / (z + 1))
        rhs = z.real * np.real(f1 * (zc - 1) / (zc + 1))
    return lhs, rhs


def check_flow_invariance(g: Generator, grid: SampleGrid | None = None) -> InequalityReport:
    pts = _grid(grid).points
    lhs, rhs = flow_invariance_sides(g, pts)
    tol = INEQ_SLACK * (1 + np.abs(lhs) + np.abs(rhs))
    bad = lhs > rhs + tol
    violations = [(complex(z), float(a), float(b)) for z, a, b in zip(pts[bad], lhs[bad], rhs[bad])]
    return InequalityReport(violations, pts.size, float(np.max(lhs - rhs)))


def check_range_halfplane(g: Generator, grid: SampleGrid | None = None) -> InequalityReport:
    pts = _grid(grid).points
    vals = evaluate(g, pts)
    if np.all(vals == 0):
        raise PreconditionFailed("f vanishes identically on the grid")
    re_f = vals.real
    bad = re_f < -INEQ_SLACK * (1 + np.abs(vals))
    violations = [(complex(z), float(r)) for z, r in zip(pts[bad], re_f[bad])]
    return InequalityReport(violations, pts.size, float(np.min(re_f)))


# -- behaviour at infinity ---------------------------------------------------

@dataclass
class LimitEstimate:
    value: complex
    converged: bool
    estimates: list

    @property
    def delta(self) -> float:
        return self.value.real

    @property
    def imag_diagnostic(self) -> float:
        return self.value.imag


def _aitken(seq):
    out = []
    for s0, s1, s2 in zip(seq, seq[1:], seq[2:]):
        d1 = s1 - s0
        d2 = s2 - 2 * s1 + s0
        out.append(s2 if abs(d2) <= 1e-300 or abs(d2) < 1e-15 * abs(s2) else s0 - d1 * d1 / d2)
    return out


def extrapolate_limit(values, tol: float = 1e-6) -> LimitEstimate:
    """Limit of a sequence sampled at geometrically growing radii.

    Repeated Aitken delta-squared passes (up to three) remove the leading
    power-law corrections, since c R^-s is geometric in the radius index.  A sequence whose last sample
    is already below 1e-8 is declared to tend to 0.
    """
    q = [complex(v) for v in values]
    if len(q) < 4:
        raise ValueError("need at least 4 samples")
    if abs(q[-1]) < ZERO_LIMIT:
        return LimitEstimate(0j, True, q)
    est = _aitken(q)
    for _ in range(2):
        if len(est) < 5:
            break
        est = _aitken(est)
    diffs = [b - a for a, b in zip(est, est[1:])]
    limit = est[-1]
    scale = 1 + abs(limit)
    converged = abs(diffs[-1]) <= tol * scale if diffs else True
    if not converged and len(diffs) >= 2:
        oscillating = (diffs[-1] * diffs[-2].conjugate()).real < 0
        if oscillating:
            raise NotConverged(f"limit estimates oscillate: {est[-3:]}")
    if abs(limit) < ZERO_LIMIT:
        limit = 0j
    return LimitEstimate(limit, converged, est)


def _radii(radii):
    r = DEFAULT_RADII if radii is None else np.asarray(radii, dtype=float)
    if r.size < 4 or np.any(np.diff(r) <= 0) or np.any(r <= 0):
        raise ValueError("radii must be at least 4 increasing positive values")
    return r


def angular_derivative_at_infinity(g: Generator, radii=None, tol: float = 1e-6) -> LimitEstimate:
    """Limit of f(R)/(R+1) as R -> +inf along the real axis."""
    r = _radii(radii)
    vals = evaluate(g, r.astype(complex))
    return extrapolate_limit(vals / (r + 1), tol)


class SemigroupType(str, enum.Enum):
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"


def classify_type(g: Generator, radii=None, tol: float = 1e-6) -> SemigroupType:
    r = _radii(radii)
    lim = extrapolate_limit(evaluate(g, r.astype(complex)) / r, tol)
    if not lim.converged:
        raise NotConverged(f"f(R)/R did not settle: {lim.estimates[-3:]}")
    return SemigroupType.HYPERBOLIC if lim.value.real > tol else SemigroupType.PARABOLIC


# -- argument envelopes and sectors ------------------------------------------

@dataclass(frozen=True)
class ArgEnvelope:
    k: float
    gamma1: float
    gamma2: float
    lo: float  # signed inf of arg f over the sampled {Re z >= k}
    hi: float  # signed sup
    degenerate: bool = False


_BELOW_HALF_PI = math.nextafter(HALF_PI, 0.0)


def _arg_bounds(values):
    args = np.angle(values)
    if np.any(np.abs(args) > HALF_PI + 1e-12):
        raise DegenerateEnvelope("arg f leaves (-pi/2, pi/2): Re f < 0 somewhere on the grid")
    return float(np.min(args)), float(np.max(args))


def arg_envelope(g: Generator, k: float = 0.0, grid: SampleGrid | None = None) -> ArgEnvelope:
    """Sampled bounds -gamma1 <= arg f <= gamma2 over the sub-half-plane Re z >= k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    sub = _grid(grid, k).restricted(k)
    lo, hi = _arg_bounds(evaluate(g, sub.points))
    degenerate = max(abs(lo), abs(hi)) >= HALF_PI - DEGENERATE_MARGIN
    return ArgEnvelope(k=k,
                       gamma1=min(max(0.0, -lo), _BELOW_HALF_PI),
                       gamma2=min(max(0.0, hi), _BELOW_HALF_PI),
                       lo=lo, hi=hi, degenerate=degenerate)


@dataclass(frozen=True)
class Sector:
    """Omega(theta1, theta2) = {zeta : -theta1 < arg zeta < theta2}."""

    theta1: float
    theta2: float
    outer_estimate: bool = False

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 > 0):
            raise ValueError("sector angles must be positive")
        if self.theta1 + self.theta2 > math.pi + 1e-12:
            raise ValueError("theta1 + theta2 must not exceed pi")

    def contains(self, zeta: complex) -> bool:
        if zeta == 0:
            return False
        arg = cmath.phase(zeta)
        return -self.theta1 < arg < self.theta2

    def interior_angle(self, fraction: float) -> float:
        """Ray angle at ``fraction`` of the way to an edge (positive: upper edge)."""
        return fraction * (self.theta2 if fraction >= 0 else self.theta1)


def sector_of_analyticity(g: Generator, grid: SampleGrid | None = None) -> Sector | None:
    """Sector into which the semigroup extends, or None when it is empty.

    Grid sampling only sees part of f(Pi), so the result is an outer estimate.
    """
    try:
        env = arg_envelope(g, 0.0, grid)
    except DegenerateEnvelope:
        return None
    theta1 = HALF_PI + env.lo
    theta2 = HALF_PI - env.hi
    if env.degenerate or theta1 <= 0 or theta2 <= 0:
        return None
    return Sector(theta1, theta2, outer_estimate=True)


def class_g_deltas(g: Generator, k: float, grid: SampleGrid | None = None):
    """(delta1, delta2): -inf and sup of arg[f / (A (z+1)^(1-alpha))] over Re z >= k."""
    if g.kind != "classg":
        raise PreconditionFailed("class_g_sector needs a classg generator")
    alpha, A = g.params["alpha"], g.params["A"]
    pts = _grid(grid, k).restricted(k).points
    lead = A * _pow(pts + 1, 1 - alpha)
    ratio = evaluate(g, pts) / lead
    args = np.angle(ratio)
    return float(-np.min(args)), float(np.max(args))


def class_g_sector(g: Generator, k: float, grid: SampleGrid | None = None) -> Sector | None:
    if g.kind != "classg":
        raise PreconditionFailed("class_g_sector needs a classg generator")
    if not k > 0:
        raise PreconditionFailed("class_g_sector needs k > 0")
    alpha, A = g.params["alpha"], g.params["A"]
    width = HALF_PI * min(alpha, 2 - alpha)
    arg_a = cmath.phase(A)
    if not abs(arg_a) < width:
        raise PreconditionFailed(f"|arg A| = {abs(arg_a):.6g} must be < {width:.6g}")
    d1, d2 = class_g_deltas(g, k, grid)
    theta1 = width + arg_a - d1
    theta2 = width - arg_a - d2
    if theta1 <= 0 or theta2 <= 0:
        return None
    return Sector(theta1, theta2, outer_estimate=True)
