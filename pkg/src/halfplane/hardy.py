"""Hardy spaces H^p of the right half-plane: boundary-quadrature norms, the
e_n basis, composition operators and the checks built on them.

The norm of phi is the supremum over x > 0 of the vertical-line p-means
((1/pi) * integral of |phi(x+iy)|^p dy)^(1/p).  For the rational test
functions used here the means increase as x decreases, so the norm is the
x -> 0+ limit, estimated from a decreasing sequence of lines.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import (BranchAmbiguity, DomainError, NewtonDiverged, NonConvergent,
                     NotConverged, PreconditionFailed, TailTooFat)
from .flow import flow_map
from .generators import (Generator, SampleGrid, SemigroupType, angular_derivative_at_infinity,
                         check_range_halfplane, classify_type, extrapolate_limit, DEFAULT_RADII)
from .koenigs import DEFAULT_INVERSION, InversionParams, KoenigsMap, analytic_extension
from .records import record

TAIL_FRACTION = 1e-3
LIMIT_TOL = 1e-6   # accuracy of extrapolated limits at infinity


@dataclass(frozen=True, eq=False)
class HardyFunction:
    eval: Callable
    p: float
    name: str = ""

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("p must be >= 1")

    def __call__(self, z):
        return self.eval(z)


@dataclass(frozen=True)
class BoundaryQuadrature:
    x_sequence: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    y_cut: float = 1e8
    limit: int = 400
    rel_tol: float = 1e-12
    cauchy_tol: float = 1e-6

    def __post_init__(self):
        xs = tuple(float(x) for x in self.x_sequence)
        if len(xs) < 3 or any(x <= 0 for x in xs) or any(b >= a for a, b in zip(xs, xs[1:])):
            raise ValueError("x_sequence must hold at least three decreasing positive values")
        object.__setattr__(self, "x_sequence", xs)
        if not self.y_cut > 1:
            raise ValueError("y_cut must exceed 1")


DEFAULT_QUAD = BoundaryQuadrature()


# -- boundary integrals ------------------------------------------------------

def _line_integral(func, x: float, quad: BoundaryQuadrature, breaks=()):
    """Integral over y in [-y_cut, y_cut] of func(x + iy) (real-valued), plus a
    tail estimate from the decay at the cut.  Integrated in s = arctan y.
    """
    s_cut = math.atan(quad.y_cut)

    def integrand(s):
        y = math.tan(s)
        return func(complex(x, y)) * (1.0 + y * y)

    pts = sorted({math.atan(b) for b in breaks if -quad.y_cut < b < quad.y_cut})
    with warnings.catch_warnings():
        # roundoff warnings at tight tolerances are judged by the error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(integrand, -s_cut, s_cut, points=pts or None, limit=quad.limit,
                                  epsabs=0.0, epsrel=quad.rel_tol)
    if not err <= 1e-8 * abs(val) + 1e-11:
        raise NonConvergent(f"boundary quadrature error estimate {err:.3g} for value {val:.6g}")
    Y = quad.y_cut
    tail = 0.0
    for sign in (1.0, -1.0):
        far = abs(func(complex(x, sign * Y)))
        half = abs(func(complex(x, sign * 0.5 * Y)))
        if far == 0.0:
            continue
        rate = math.log2(half / far) if half > 0 else math.inf
        if rate <= 1.0:
            raise TailTooFat(f"integrand decays like |y|^-{rate:.3g} at the cut")
        tail += far * Y / (rate - 1.0)
    return val, tail


@dataclass
class NormEstimate:
    value: float          # extrapolated x -> 0+ limit
    x: tuple
    means: list           # ((1/pi) * integral)^(1/p) per line
    sup: float            # max over the sampled lines
    tail: float           # largest relative tail correction


def vertical_mean(phi: HardyFunction, x: float, quad: BoundaryQuadrature = DEFAULT_QUAD, breaks=()):
    p = phi.p

    def integrand(z):
        return abs(complex(phi(z))) ** p

    val, tail = _line_integral(integrand, x, quad, breaks)
    if tail > TAIL_FRACTION * abs(val):
        raise TailTooFat(f"estimated tail {tail:.3g} exceeds {TAIL_FRACTION} of the integral")
    return ((val + tail) / math.pi) ** (1.0 / p), tail / max(abs(val), 1e-300)


def _to_boundary(xs, ms):
    """Linear extrapolation of the line means to x = 0."""
    (x1, x2), (m1, m2) = xs, ms
    return m2 + (m2 - m1) * x2 / (x1 - x2)


def hp_norm(phi: HardyFunction, quad: BoundaryQuadrature = DEFAULT_QUAD, breaks=()) -> NormEstimate:
    means = []
    tails = []
    for x in quad.x_sequence:
        m, t = vertical_mean(phi, x, quad, breaks)
        means.append(m)
        tails.append(t)
    value = _to_boundary(quad.x_sequence[-2:], means[-2:])
    if len(means) >= 3:
        previous = _to_boundary(quad.x_sequence[-3:-1], means[-3:-1])
        if abs(value - previous) > quad.cauchy_tol * (1 + abs(value)):
            raise NonConvergent(f"boundary extrapolations disagree: {previous!r} vs {value!r}")
    return NormEstimate(value, quad.x_sequence, means, max(means), max(tails))


# -- test functions ----------------------------------------------------------

def _cpow(base, expo):
    with np.errstate(all="ignore"):
        return np.exp(expo * np.log(np.asarray(base, dtype=complex)))


def _out(v):
    return complex(v) if np.ndim(v) == 0 else v


def e_n(n: int, p: float) -> HardyFunction:
    """(z-1)^n / (z+1)^(2/p+n) on the principal branch."""
    if n < 0:
        raise ValueError("n must be >= 0")

    def ev(z):
        z = np.asarray(z, dtype=complex)
        return _out(((z - 1) / (z + 1)) ** n * _cpow(z + 1, -2.0 / p))

    return HardyFunction(ev, p, f"e_{n}")


def phi_test(a: complex, n: int, p: float) -> HardyFunction:
    """(z-a)^n / ((z+1)^(2/p) (z+conj a)^n), of unit norm."""
    a = complex(a)
    if not a.real > 0:
        raise DomainError("a must lie in the right half-plane")

    def ev(z):
        z = np.asarray(z, dtype=complex)
        return _out(((z - a) / (z + a.conjugate())) ** n * _cpow(z + 1, -2.0 / p))

    return HardyFunction(ev, p, f"phi[a={a},n={n}]")


_SPOT = np.array([x + 1j * y for x in (1e-3, 1.0, 1e2) for y in (-1e2, -1.0, 0.0, 1.0, 1e2)])


def compose(phi: HardyFunction, F: Callable, spot=None) -> HardyFunction:
    """z -> phi(F(z)), after checking that F maps sample points into the half-plane."""
    pts = _SPOT if spot is None else np.asarray(spot, dtype=complex)
    images = np.asarray(F(pts), dtype=complex)
    if np.any(~(images.real > 0)):
        raise DomainError("F does not map the spot-check points into the right half-plane")

    def ev(z):
        return phi(F(z))

    return HardyFunction(ev, phi.p, f"{phi.name}∘F")


@dataclass(frozen=True, eq=False)
class BlackBoxOperator:
    """Operator known only through its action on the basis: n -> T e_n."""

    action: Callable[[int], HardyFunction]
    p: float
    _memo: dict = field(default_factory=dict, repr=False)

    def image(self, n: int) -> HardyFunction:
        if n not in self._memo:
            self._memo[n] = self.action(n)
        return self._memo[n]


def composition_operator(F: Callable, p: float) -> BlackBoxOperator:
    return BlackBoxOperator(lambda n: compose(e_n(n, p), F), p)


# -- characterization of composition operators -------------------------------

DEFAULT_CHAR_GRID = SampleGrid.default(n_re=12, n_im=13, re_span=(1e-2, 1e3), im_max=1e3)


@dataclass
class CharacterizationReport:
    is_composition: bool
    points: np.ndarray
    F_samples: np.ndarray
    min_re_F: float
    angular_limit: complex | None
    residuals: dict
    failures: list


def characterize_composition(T: BlackBoxOperator, N: int = 6, grid: SampleGrid | None = None,
                             radii=None, tol: float = 1e-8) -> CharacterizationReport:
    """Decide whether T acts as phi -> phi∘F, reconstructing F from T e_0."""
    if N < 2:
        raise ValueError("N must be >= 2")
    p = T.p
    pts = (DEFAULT_CHAR_GRID if grid is None else grid).points
    radii = DEFAULT_RADII if radii is None else np.asarray(radii, dtype=float)
    half_p = 0.5 * p
    integral_power = half_p == int(half_p)

    def root(w):
        w = np.asarray(w, dtype=complex)
        if integral_power:
            return w ** int(half_p)
        ambiguous = np.abs(np.angle(w)) > math.pi - 1e-9
        if np.any(ambiguous):
            raise BranchAmbiguity(np.atleast_1d(w)[np.atleast_1d(ambiguous)])
        return _cpow(w, half_p)

    failures = []
    t0 = np.asarray(T.image(0)(pts), dtype=complex)
    s0 = root(t0)
    F = 1.0 / s0 - 1.0
    min_re = float(np.min(F.real))
    if not min_re > 0:
        failures.append("a: Re F <= 0 somewhere on the grid")

    limit = None
    try:
        t0_r = np.asarray(T.image(0)(radii.astype(complex)), dtype=complex)
        est = extrapolate_limit((1.0 / root(t0_r) - 1.0) / radii, LIMIT_TOL)
        limit = est.value
        if not est.converged:
            failures.append("b: F(R)/R did not converge")
        elif abs(limit) <= LIMIT_TOL:
            failures.append("b: angular derivative of F at infinity vanishes")
    except NotConverged as exc:
        failures.append(f"b: {exc}")

    residuals = {}
    q = 1.0 - 2.0 * s0
    for n in range(1, N + 1):
        tn = np.asarray(T.image(n)(pts), dtype=complex)
        r = float(np.max(np.abs(tn - t0 * q ** n)))
        residuals[n] = r
        if not r <= tol:
            failures.append(f"c: n={n} residual {r:.3g}")
    return CharacterizationReport(not failures, pts, F, min_re, limit, residuals, failures)


# -- semigroup checks --------------------------------------------------------

def _semigroup_map(g: Generator, t: float):
    if g.oracle is not None:
        return lambda z: g.oracle(t, 0.0, z)
    return flow_map(g, t)


@dataclass
class NormLaw:
    delta: float
    predicted: float
    measured_lower: float
    ratios: dict


def operator_norm_law(g: Generator, t: float, p: float, quad: BoundaryQuadrature = DEFAULT_QUAD,
                      family: Sequence[HardyFunction] | None = None) -> NormLaw:
    """Predicted ||C_{F_t}|| = exp(-delta t / p) against ratios ||phi∘F_t|| / ||phi||."""
    if t < 0:
        raise ValueError("t must be >= 0")
    lim = angular_derivative_at_infinity(g)
    if not lim.converged:
        raise NotConverged("angular derivative at infinity did not converge")
    delta = lim.delta
    predicted = math.exp(-delta * t / p)
    if family is None:
        family = (e_n(0, p), e_n(1, p), phi_test(2.0, 1, p))
    F = (lambda z: z) if t == 0 else _semigroup_map(g, t)
    ratios = {}
    for phi in family:
        ratios[phi.name] = hp_norm(compose(phi, F), quad).value / hp_norm(phi, quad).value
    return NormLaw(delta, predicted, max(ratios.values()), ratios)


@dataclass
class Pairing:
    quadrature_value: complex
    closed_form: complex
    line_values: tuple


def pairing_closed_form(g: Generator, a: complex, n: int, p: float) -> complex:
    a = complex(a)
    ac = a.conjugate()
    fa = g.scalar(a)
    f1 = g.scalar(1.0)
    return ((2 * n / abs(a - 1) ** 2) * (fa * (ac - 1) / (a + 1) - f1 * a.real * (ac - 1) / (ac + 1))
            - f1 / p)


def dissipativity_pairing(g: Generator, a: complex, n: int, p: float,
                          quad: BoundaryQuadrature = DEFAULT_QUAD) -> Pairing:
    """<f phi_n', phi_n*> by boundary quadrature and in closed form.

    The line integral (1/pi) * integral of f phi_n'/phi_n |phi_n|^p dy is
    evaluated on x0 and 2 x0 (x0 the last entry of the x sequence) and
    extrapolated linearly to the boundary.
    """
    a = complex(a)
    if not a.real > 0 or a == 1:
        raise PreconditionFailed("need Re a > 0 and a != 1")
    if n < 1 or not p > 1:
        raise PreconditionFailed("need n >= 1 and p > 1")
    phi = phi_test(a, n, p)
    ac = a.conjugate()
    f = g.scalar

    def kernel(z):
        return f(z) * (n / (z - a) - 2 / (p * (z + 1)) - n / (z + ac)) * abs(phi(z)) ** p

    def line(x):
        parts = []
        for part in (lambda z: kernel(z).real, lambda z: kernel(z).imag):
            val, tail = _line_integral(part, x, quad, breaks=(a.imag, 0.0))
            parts.append(val)
        return complex(parts[0], parts[1]) / math.pi

    x0 = quad.x_sequence[-1]
    v1 = line(x0)
    v2 = line(2 * x0)
    return Pairing(2 * v1 - v2, pairing_closed_form(g, a, n, p), (v1, v2))


# -- contractive extension ---------------------------------------------------

CONTRACTIVE_QUAD = BoundaryQuadrature(x_sequence=(1e-3, 1e-4, 1e-5), rel_tol=1e-10)


def contractive_extension_check(g: Generator, zeta_samples: Sequence[complex], p: float,
                                quad: BoundaryQuadrature = CONTRACTIVE_QUAD, N: int = 3,
                                grid: SampleGrid | None = None, tol: float = 1e-6,
                                inversion: InversionParams = DEFAULT_INVERSION) -> list:
    """For each zeta: contractivity of e_n∘F_zeta, the characterization of
    e_n -> e_n∘F_zeta, and additivity F_{z2}∘F_{z1} = F_{z1+z2} on the grid.
    """
    if classify_type(g) is not SemigroupType.PARABOLIC:
        raise PreconditionFailed("contractive extension needs a parabolic generator")
    if not check_range_halfplane(g).ok:
        raise PreconditionFailed("Re f < 0 somewhere on the grid")
    lim = angular_derivative_at_infinity(g)
    if not lim.converged or lim.delta != 0.0:
        raise PreconditionFailed("angular derivative at infinity is not a converged 0")
    m = KoenigsMap(g)
    cache: dict = {}

    def ext(zeta):
        def F(z):
            za = np.asarray(z, dtype=complex)
            out = np.empty(za.size, dtype=complex)
            for i, w in enumerate(za.ravel()):
                key = (zeta, w)
                if key not in cache:
                    cache[key] = analytic_extension(m, w, zeta, inversion)
                out[i] = cache[key]
            out = out.reshape(za.shape)
            return complex(out) if out.ndim == 0 else out
        return F

    pts = (DEFAULT_CHAR_GRID if grid is None else grid).points
    records = []
    usable = []
    for zeta in map(complex, zeta_samples):
        params = {"generator": g.to_spec(), "zeta": zeta, "p": p, "N": N}
        F = ext(zeta)
        try:
            F(pts)
        except NewtonDiverged as exc:
            records.append(record("extension", params, "defined", "NewtonDiverged", None, False)
                           | {"note": f"expected outside the sector: {exc}"})
            continue
        usable.append(zeta)
        for k in range(N + 1):
            base = hp_norm(e_n(k, p), quad).value
            img = hp_norm(compose(e_n(k, p), F), quad).value
            records.append(record("contractivity", params | {"n": k}, base, img,
                                  img - base, img <= base + tol))
        rep = characterize_composition(composition_operator(F, p), N, grid, tol=tol)
        records.append(record("characterization", params, True, rep.is_composition,
                              max(rep.residuals.values()), rep.is_composition))
    for z1, z2 in zip(usable, usable[1:]):
        params = {"generator": g.to_spec(), "zeta1": z1, "zeta2": z2, "p": p}
        lhs = ext(z2)(ext(z1)(pts))
        try:
            rhs = ext(z1 + z2)(pts)
        except NewtonDiverged:
            continue
        worst = 0.0
        for k in range(N + 1):
            e = e_n(k, p)
            worst = max(worst, float(np.max(np.abs(e(lhs) - e(rhs)))))
        records.append(record("additivity", params, 0.0, worst, worst, worst <= tol))
    return records
