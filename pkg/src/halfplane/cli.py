"""Command-line front end: JSON reports and CSV data for the library checks.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or parse error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import cmath
import sys

import numpy as np

from . import __version__
from . import envelope as env_mod
from . import flow as flow_mod
from . import generators as gen_mod
from . import hardy as hardy_mod
from . import koenigs as koenigs_mod
from .errors import (DegenerateEnvelope, DomainError, DomainExit, HalfPlaneError, NewtonDiverged,
                     OutOfRangeParameter, ParseError, PreconditionFailed)
from .expr import eval_constant, parse_expression
from .records import dumps, encode, record

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

EXERCISES = {
    "validate": "generator test by the flow-invariance inequality, range condition Re f >= 0, "
                "type from the angular derivative at infinity",
    "sector": "analytic extension into the sector cut out by the argument envelope of f; "
              "widening for restricted semigroups F_t(z+k)-k",
    "evolve": "semigroup as the solution of the Cauchy problem du/ds = e^{i theta} f(u), u(0)=z",
    "extend": "complex-time extension F_zeta = h^-1(h(z)+zeta) agreeing with the ray flow",
    "koenigs": "Abel equation h(F_t(z)) = h(z)+t with h' f = 1; convexity of h in a direction",
    "envelope": "localization of a trajectory between the envelope curves B1 and B2",
    "hardy": "composition operators on H^p: unit-norm test functions, norm law exp(-delta t/p), "
             "dissipativity pairing, characterization through T e_0",
    "report": "battery of all checks for one generator",
}

DEFAULTS = {
    "gen": None, "grid_re": 64, "grid_im": 65, "tol": None, "out": None, "format": "json",
    "seed": 0, "z0": "1", "t": 1.0, "theta": 0.0, "n": 2, "zeta": "1", "k": "0.1,1,4.5,10",
    "u_max": None, "t_max": 20.0, "p": 2.0, "check": "norm", "a": "2", "index": 1, "N": 6,
    "eps": None,
}
_FLOAT_KEYS = {"tol", "t", "theta", "u_max", "t_max", "p", "eps"}
_INT_KEYS = {"grid_re", "grid_im", "seed", "n", "index", "N"}


# -- argument handling -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--gen", help="generator spec, e.g. 'power: alpha=0.5'")
    common.add_argument("--grid-re", type=int, help="real-axis samples (default 64)")
    common.add_argument("--grid-im", type=int, help="imaginary-axis samples (default 65)")
    common.add_argument("--tol", type=float, help="pass/fail tolerance for the command's checks")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int, help="seed for randomized sample points")
    common.add_argument("--config", help="file of key=value lines; command-line flags win")

    parser = _Parser(prog="halfplane", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"halfplane {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="flow invariance, range and type")
    p = sub.add_parser("sector", parents=[common], help="sector of analyticity and gamma(k) table")
    p.add_argument("--k", help="comma-separated k values for the restricted envelopes")
    p.add_argument("--eps", type=float, help="target half-angle for the moebius threshold")

    p = sub.add_parser("evolve", parents=[common], help="integrate the flow along a ray")
    p.add_argument("--z0")
    p.add_argument("--t", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--n", type=int, help="number of trajectory samples (>= 2)")

    p = sub.add_parser("extend", parents=[common], help="complex-time extension F_zeta(z)")
    p.add_argument("--z0")
    p.add_argument("--zeta", help="complex time, e.g. 'exp(0.3927i)'")

    p = sub.add_parser("koenigs", parents=[common], help="Koenigs map, Abel residual, convexity")
    p.add_argument("--z0")
    p.add_argument("--t", type=float)
    p.add_argument("--theta", type=float)

    p = sub.add_parser("envelope", parents=[common], help="trajectory envelope and containment")
    p.add_argument("--z0")
    p.add_argument("--u-max", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--n", type=int, help="envelope knots")

    p = sub.add_parser("hardy", parents=[common], help="H^p composition-operator checks")
    p.add_argument("--check", choices=("norm", "law", "pairing", "characterize", "contractive"))
    p.add_argument("--p", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--a", help="test-function parameter a (Re a > 0)")
    p.add_argument("--index", type=int, help="test-function order n")
    p.add_argument("--N", type=int, help="basis size for the characterization")
    p.add_argument("--zeta", help="comma-separated complex times for the contractive check")

    p = sub.add_parser("report", parents=[common], help="run every check on one generator")
    p.add_argument("--p", type=float)
    return parser


def _read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"config line {lineno} is not key=value", 0, ("=",))
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def resolve_options(args) -> dict:
    """Merge defaults < config file < command-line flags."""
    opts = dict(DEFAULTS)
    if args.config:
        for key, value in _read_config(args.config).items():
            if key not in DEFAULTS:
                raise ParseError(f"unknown config key {key!r}", 0, sorted(DEFAULTS))
            try:
                opts[key] = (float(value) if key in _FLOAT_KEYS
                             else int(value) if key in _INT_KEYS else value)
            except ValueError:
                raise ParseError(f"bad value for config key {key!r}: {value!r}", 0, ("number",))
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            opts[key] = value
    return opts


def _complex(text) -> complex:
    return eval_constant(parse_expression(str(text)))


def _complex_list(text):
    return [_complex(part) for part in str(text).split(",") if part.strip()]


def _generator(opts):
    if not opts["gen"]:
        raise ParseError("missing --gen", 0, ("--gen",))
    return gen_mod.parse_generator(opts["gen"])


def _grid(opts, k=0.0):
    return gen_mod.SampleGrid.default(k, n_re=opts["grid_re"], n_im=opts["grid_im"])


def _header(command, opts, g=None):
    head = {"tool": "halfplane", "version": __version__, "command": command,
            "exercises": EXERCISES[command]}
    if g is not None:
        head["generator"] = g.to_spec()
    return head


# -- commands ----------------------------------------------------------------

def cmd_validate(opts):
    g = _generator(opts)
    grid = _grid(opts)
    inv = gen_mod.check_flow_invariance(g, grid)
    rng = gen_mod.check_range_halfplane(g, grid)
    try:
        kind = gen_mod.classify_type(g).value
    except HalfPlaneError as exc:
        kind = f"unclassified: {exc}"
    lim = gen_mod.angular_derivative_at_infinity(g)
    records = [
        record("flow_invariance", {"points": inv.n_points}, 0, len(inv.violations),
               inv.extreme, inv.ok),
        record("range", {"points": rng.n_points}, ">= 0", rng.extreme, min(rng.extreme, 0.0), rng.ok),
    ]
    body = {"records": records, "type": kind, "angular_derivative": lim.value,
            "angular_converged": lim.converged,
            "flow_invariance_violations": [list(v) for v in inv.violations[:20]],
            "range_violations": [list(v) for v in rng.violations[:20]]}
    return inv.ok and rng.ok, body, None


def cmd_sector(opts):
    g = _generator(opts)
    sec = gen_mod.sector_of_analyticity(g, _grid(opts))
    ks = [float(k) for k in str(opts["k"]).split(",") if k.strip()]
    table = []
    for k in ks:
        e = gen_mod.arg_envelope(g, k, _grid(opts, k))
        row = {"k": k, "gamma1": e.gamma1, "gamma2": e.gamma2, "lo": e.lo, "hi": e.hi,
               "degenerate": e.degenerate}
        if g.kind == "moebius":
            row["gamma_exact"] = float(env_mod.moebius_gamma(g.params["a"], g.params["b"], k))
        if g.kind == "classg":
            try:
                cs = gen_mod.class_g_sector(g, k, _grid(opts, k))
                row["classg_theta"] = None if cs is None else [cs.theta1, cs.theta2]
            except PreconditionFailed as exc:
                row["classg_theta"] = f"precondition failed: {exc}"
        table.append(row)
    body = {"empty": sec is None,
            "theta1": None if sec is None else sec.theta1,
            "theta2": None if sec is None else sec.theta2,
            "outer_estimate": True, "per_k": table}
    if g.kind == "moebius" and opts["eps"] is not None:
        body["threshold_k"] = env_mod.moebius_threshold(g.params["a"], g.params["b"], opts["eps"])
    rows = [(r["k"], r["gamma1"], r["gamma2"]) for r in table]
    return True, body, ("k,gamma1,gamma2", rows)


def cmd_evolve(opts):
    g = _generator(opts)
    z0 = _complex(opts["z0"])
    tr = flow_mod.trajectory(g, z0, opts["t"], max(2, opts["n"]), opts["theta"])
    sec = gen_mod.sector_of_analyticity(g, _grid(opts))
    inside = opts["theta"] == 0.0 or (sec is not None and sec.contains(cmath.exp(1j * opts["theta"])))
    body = {"z0": z0, "theta": opts["theta"], "theta_inside_sector": inside,
            "samples": [{"t": t, "z": z} for t, z in tr.samples]}
    if g.oracle is not None:
        ref = g.oracle(opts["t"], opts["theta"], z0)
        err = abs(tr.z[-1] - ref)
        tol = opts["tol"] or 1e-8
        body["records"] = [record("oracle", {"t": opts["t"]}, ref, tr.z[-1], err,
                                  err <= tol * (1 + abs(ref)))]
        ok = body["records"][0]["pass"]
    else:
        ok = True
    rows = [(t, z.real, z.imag) for t, z in tr.samples]
    return ok, body, ("t,re,im", rows)


def cmd_extend(opts):
    g = _generator(opts)
    z0 = _complex(opts["z0"])
    zeta = _complex(opts["zeta"])
    m = koenigs_mod.KoenigsMap(g)
    tol = opts["tol"] or 1e-6
    sec = gen_mod.sector_of_analyticity(g, _grid(opts))
    body = {"z0": z0, "zeta": zeta, "inside_sector": bool(sec and sec.contains(zeta))}
    try:
        F = koenigs_mod.analytic_extension(m, z0, zeta)
    except NewtonDiverged as exc:
        body["extension"] = None
        body["diverged"] = str(exc)
        try:
            flow_mod.evolve(g, z0, abs(zeta), cmath.phase(zeta))
            body["flow_exit"] = False
        except DomainExit:
            body["flow_exit"] = True
        return not body["inside_sector"], body, None
    ray = flow_mod.evolve(g, z0, abs(zeta), cmath.phase(zeta))
    diff = abs(F - ray)
    body["extension"] = F
    body["records"] = [record("extension_vs_ray_flow", {"t": abs(zeta), "theta": cmath.phase(zeta)},
                              ray, F, diff, diff <= tol)]
    return diff <= tol, body, None


def cmd_koenigs(opts):
    g = _generator(opts)
    m = koenigs_mod.KoenigsMap(g)
    z0 = _complex(opts["z0"])
    tol = opts["tol"] or 1e-7
    hz = m.h(z0)
    back = koenigs_mod.h_inverse(m, hz)
    abel = koenigs_mod.abel_residual(m, z0, opts["t"])
    conv = koenigs_mod.convexity_direction_check(m, opts["theta"], _grid(opts))
    records = [
        record("abel", {"z": z0, "t": opts["t"]}, 0, abel, abel, abel <= tol),
        record("round_trip", {"z": z0}, z0, back, abs(back - z0), abs(back - z0) <= 1e-9),
        record("convexity", {"theta": opts["theta"]}, ">= 0", conv.min_value,
               min(conv.min_value, 0.0), conv.status != "fail"),
    ]
    body = {"h": hz, "convexity_status": conv.status, "records": records}
    return all(r["pass"] for r in records), body, None


def cmd_envelope(opts):
    g = _generator(opts)
    z0 = _complex(opts["z0"])
    tr = flow_mod.trajectory(g, z0, opts["t_max"], 201)
    u_max = opts["u_max"] or max(float(np.max(tr.z.real)), z0.real + 1e-6) * (1 + 1e-9)
    n = opts["n"] if opts["n"] > 2 else 101
    bound = env_mod.envelope_bounds(g, z0, u_max, n, _grid(opts))
    rep = env_mod.verify_containment(bound, tr, opts["tol"] or 1e-9)
    body = {"z0": z0, "u_max": u_max, "t_max": opts["t_max"],
            "records": [record("containment", {"samples": rep.n_samples}, 0, len(rep.violations),
                               rep.max_excess, rep.ok)],
            "envelope": [{"u": u, "B1": b1, "B2": b2} for u, b1, b2
                         in zip(bound.u_grid, bound.B1, bound.B2)]}
    if g.kind == "moebius":
        a, b = g.params["a"], g.params["b"]
        worst = max(abs(z.imag - z0.imag) - env_mod.moebius_log_bound(a, b, z0, z) for z in tr.z)
        body["records"].append(record("closed_form_log_bound", {"a": a, "b": b}, "<= 0", worst,
                                      max(worst, 0.0), worst <= 1e-6))
    rows = list(zip(bound.u_grid, bound.B1, bound.B2))
    return all(r["pass"] for r in body["records"]), body, ("u,B1,B2", rows)


def cmd_hardy(opts):
    check = opts["check"]
    p = opts["p"]
    tol = opts["tol"] or 1e-6
    if check == "norm":
        a = _complex(opts["a"])
        records = []
        for phi in (hardy_mod.e_n(0, p), hardy_mod.e_n(1, p), hardy_mod.phi_test(a, opts["index"], p)):
            est = hardy_mod.hp_norm(phi)
            records.append(record("norm", {"function": phi.name, "p": p}, 1.0, est.value,
                                  abs(est.value - 1), abs(est.value - 1) <= tol))
        return all(r["pass"] for r in records), {"records": records}, None
    g = _generator(opts)
    if check == "law":
        law = hardy_mod.operator_norm_law(g, opts["t"], p)
        ok = law.measured_lower <= law.predicted + tol
        rec = record("norm_law", {"t": opts["t"], "p": p, "delta": law.delta}, law.predicted,
                     law.measured_lower, law.measured_lower - law.predicted, ok)
        return ok, {"records": [rec], "ratios": law.ratios}, None
    if check == "pairing":
        a = _complex(opts["a"])
        pr = hardy_mod.dissipativity_pairing(g, a, opts["index"], p)
        diff = abs(pr.quadrature_value - pr.closed_form)
        ok = diff <= tol * (1 + abs(pr.closed_form)) and pr.closed_form.real <= tol
        rec = record("dissipativity_pairing", {"a": a, "n": opts["index"], "p": p},
                     pr.closed_form, pr.quadrature_value, diff, ok)
        return ok, {"records": [rec]}, None
    if check == "characterize":
        F = hardy_mod._semigroup_map(g, opts["t"])
        rep = hardy_mod.characterize_composition(hardy_mod.composition_operator(F, p), opts["N"],
                                                 tol=opts["tol"] or 1e-8)
        rec = record("characterization", {"t": opts["t"], "p": p, "N": opts["N"]}, True,
                     rep.is_composition, max(rep.residuals.values()), rep.is_composition)
        return rep.is_composition, {"records": [rec], "failures": rep.failures}, None
    zetas = _complex_list(opts["zeta"])
    records = hardy_mod.contractive_extension_check(g, zetas, p, N=min(opts["N"], 3))
    sec = gen_mod.sector_of_analyticity(g, _grid(opts))
    ok = True
    for r in records:
        if r["check"] == "extension":
            zeta = complex(float(r["params"]["zeta"]["re"]), float(r["params"]["zeta"]["im"]))
            ok &= not (sec and sec.contains(zeta))
        else:
            ok &= r["pass"]
    return ok, {"records": records}, None


def cmd_report(opts):
    g = _generator(opts)
    rs = np.random.default_rng(opts["seed"])
    sections = {}
    ok, body, _ = cmd_validate(opts)
    sections["validate"] = body
    all_ok = ok
    _, body, _ = cmd_sector(opts)
    sections["sector"] = body
    m = koenigs_mod.KoenigsMap(g)
    abel = []
    for _ in range(5):
        z = complex(rs.uniform(0.1, 5), rs.uniform(-5, 5))
        t = float(rs.uniform(0, 5))
        r = koenigs_mod.abel_residual(m, z, t)
        abel.append(record("abel", {"z": z, "t": t}, 0, r, r, r <= 1e-7))
    sections["koenigs"] = {"records": abel}
    all_ok &= all(r["pass"] for r in abel)
    law = hardy_mod.operator_norm_law(g, 1.0, opts["p"])
    law_ok = law.measured_lower <= law.predicted + 1e-6
    sections["hardy"] = {"records": [record("norm_law", {"t": 1.0, "p": opts["p"], "delta": law.delta},
                                            law.predicted, law.measured_lower,
                                            law.measured_lower - law.predicted, law_ok)]}
    return all_ok and law_ok, {"sections": sections}, None


COMMANDS = {"validate": cmd_validate, "sector": cmd_sector, "evolve": cmd_evolve,
            "extend": cmd_extend, "koenigs": cmd_koenigs, "envelope": cmd_envelope,
            "hardy": cmd_hardy, "report": cmd_report}


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{float(v):.17g}" for v in row))
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        if opts["format"] == "csv" and args.command not in ("evolve", "envelope", "sector"):
            raise ParseError(f"--format csv is not available for {args.command}", 0, ("json",))
        ok, body, table = COMMANDS[args.command](opts)
    except (ParseError, OutOfRangeParameter, PreconditionFailed, DomainError, ValueError, OSError) as exc:
        print(f"halfplane: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainExit, DegenerateEnvelope, HalfPlaneError, ArithmeticError) as exc:
        report = {"header": _header(args.command, opts), "status": "numerical-failure",
                  "error": type(exc).__name__, "message": str(exc)}
        _emit(dumps(report), opts.get("out"))
        return EXIT_NUMERIC
    gen = opts["gen"]
    header = _header(args.command, opts, gen_mod.parse_generator(gen) if gen else None)
    if opts["format"] == "csv":
        _emit(_csv(*table), opts["out"])
    else:
        _emit(dumps({"header": header, "status": "pass" if ok else "fail", **encode(body)}), opts["out"])
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
