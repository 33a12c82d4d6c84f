"""Command-line front end.

Every subcommand emits one JSON result record (schema ``reebtwist.result/1``)
or, with ``--format csv``, the record's main table.  Exit codes: 0 on
success, 2 on domain errors and usage errors, 1 on internal failures.
"""

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidInput, ReebTwistError

SCHEMA = "reebtwist.result/1"
OUTPUT_ENV = "REEBTWIST_OUTPUT_DIR"
TOL_RANGE = (1e-14, 1e-4)


# --------------------------------------------------------------------------
# result records


@dataclasses.dataclass
class ResultRecord:
    command: str
    parameters: dict
    input_digest: str
    outputs: dict
    errors: dict
    version: str
    status: str = "ok"
    wall_time: float = None
    schema: str = SCHEMA

    def to_dict(self):
        d = dataclasses.asdict(self)
        if d["wall_time"] is None:
            del d["wall_time"]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise InvalidInput(f"unknown schema {d.get('schema')!r}")
        return cls(**d)


def jsonable(obj):
    """Plain JSON values for numpy scalars, arrays, fractions and dataclasses."""
    if isinstance(obj, (bool, type(None), str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, Fraction):
        return float(obj) if obj.denominator != 1 else int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return str(obj)


def digest(command, params):
    blob = json.dumps({"command": command, "parameters": params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# specification strings


def parse_kv(text):
    """``name:key=value,key=value`` -> (name, dict of floats)."""
    name, _, rest = text.partition(":")
    out = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise InvalidInput(f"expected key=value in {text!r}, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise InvalidInput(f"value of {key!r} in {text!r} is not a number") from exc
    return name.strip(), out


def _take(name, kv, allowed):
    extra = set(kv) - set(allowed)
    if extra:
        raise InvalidInput(f"unknown keys {sorted(extra)} for {name!r}; allowed {sorted(allowed)}")
    return kv


def parse_generator(text):
    from . import sympath as sp
    name, kv = parse_kv(text)
    if name == "rotation":
        return sp.rotation_loop(_take(name, kv, {"alpha"})["alpha"])
    if name == "elliptic":
        return sp.elliptic_loop(_take(name, kv, {"alpha"})["alpha"])
    if name == "hyperbolic":
        kv = _take(name, kv, {"l", "a", "negative"})
        return sp.hyperbolic_loop(int(kv.get("l", 0)), kv.get("a", 1.0), bool(kv.get("negative", 0)))
    if name == "constant":
        kv = _take(name, kv, {"s11", "s12", "s22"})
        return sp.constant_loop([[kv.get("s11", 0.0), kv.get("s12", 0.0)],
                                 [kv.get("s12", 0.0), kv.get("s22", 0.0)]])
    if name == "random":
        kv = _take(name, kv, {"seed", "harmonics", "amplitude"})
        rng = np.random.default_rng(int(kv.get("seed", 0)))
        return sp.random_loop(rng, int(kv.get("harmonics", 2)), kv.get("amplitude", 3.0))
    raise InvalidInput(f"unknown generator {name!r}; use rotation, elliptic, hyperbolic, constant or random")


def parse_scaling(text):
    from . import modelforms, s3flow
    name, kv = parse_kv(text)
    if name == "unit":
        _take(name, kv, set())
        return s3flow.unit_scaling()
    if name == "constant":
        return s3flow.constant_scaling(_take(name, kv, {"c"})["c"])
    if name == "linear":
        kv = _take(name, kv, {"a", "b"})
        return s3flow.linear_scaling(kv["a"], kv.get("b", 1.0))
    if name == "hyperbolic":
        return s3flow.hyperbolic_test_scaling(_take(name, kv, {"c"}).get("c", 1.0))
    if name == "model":
        kv = _take(name, kv, {"theta0", "theta1"})
        return modelforms.model_scaling(modelforms.model_form(kv["theta0"], kv["theta1"]))
    raise InvalidInput(f"unknown scaling {name!r}; use unit, constant, linear, hyperbolic or model")


def parse_point(text):
    try:
        z = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InvalidInput(f"bad point {text!r}") from exc
    if z.size != 4 or np.linalg.norm(z) == 0:
        raise InvalidInput("a point of S^3 needs four coordinates, not all zero")
    return z / np.linalg.norm(z)


def check_tol(tol):
    if not TOL_RANGE[0] <= tol <= TOL_RANGE[1]:
        raise InvalidInput(f"tolerance {tol!r} outside the safe range {TOL_RANGE}")
    return tol


# --------------------------------------------------------------------------
# commands; each returns (outputs, errors, table)


def cmd_cz(a):
    from . import sympath as sp
    rep = sp.index_report(parse_generator(a.generator), window=a.window, tol=check_tol(a.tol))
    out = {"mu": rep.mu_geometric, "mu_analytic": rep.mu_analytic, "orbit_type": rep.orbit_type,
           "winding_interval": [rep.interval.lo, rep.interval.hi],
           "wind_minus": rep.spectrum.wind_minus, "wind_plus": rep.spectrum.wind_plus,
           "p": rep.spectrum.p}
    return out, {"interval_width": rep.interval.width}, None


def cmd_spectrum(a):
    from . import sympath as sp
    spec = sp.asymptotic_spectrum(parse_generator(a.generator), window=a.window, tol=check_tol(a.tol))
    rows = [{"eigenvalue": e, "winding": w} for e, w in zip(spec.eigenvalues, spec.windings)]
    out = {"eigenvalues": list(spec.eigenvalues), "windings": list(spec.windings),
           "wind_minus": spec.wind_minus, "wind_plus": spec.wind_plus, "p": spec.p,
           "mu": sp.cz_index_analytic(spec)}
    return out, {"fourier_modes": spec.modes}, rows


def cmd_iterate(a):
    from . import sympath as sp
    prof = sp.iterate_index_profile(parse_generator(a.generator), a.k_max)
    rows = [{"k": k, "mu": mu, "wind_minus": wm, "wind_plus": wp, "predicted_mu": pr[1]}
            for (k, mu, wm, wp), pr in zip(prof.rows, prof.predicted)]
    out = {"orbit_type": prof.orbit_type, "parameter": prof.parameter, "matches": prof.matches,
           "rows": rows}
    return out, {}, rows


def cmd_rotation(a):
    from . import sympath as sp
    r = sp.rotation_number(parse_generator(a.generator), a.k_max)
    return {"rho": r.value, "iterations": r.iterations}, {"rho": r.error}, None


def cmd_twist_enum(a):
    from . import twistcone as tc
    data = tc.TwistData(a.theta0, a.theta1)
    classes = tc.enumerate_classes(data, a.bound)
    rows = [{"p": c.p, "q": c.q} for c in classes]
    return {"classes": rows, "count": len(rows)}, {}, rows


def cmd_model_orbits(a):
    from . import modelforms as mf
    from . import s3flow, twistcone as tc
    form = mf.model_form(a.theta0, a.theta1)
    scaling = mf.model_scaling(form)
    rows = []
    worst = 0.0
    for cls in tc.enumerate_classes(form.twist, a.bound):
        torus = mf.locate_torus(form, cls)
        z0 = torus.on_sphere()
        traj = s3flow.integrate_reeb(scaling, z0, torus.period)
        gap = float(np.linalg.norm(traj.z[-1] - traj.z[0]))
        links = s3flow.linking_numbers(traj)
        worst = max(worst, gap)
        rows.append({"p": cls.p, "q": cls.q, "t_star": torus.t_star, "period": torus.period,
                     "link0": links[0], "link1": links[1], "gap": gap})
    return {"classes": rows}, {"max_gap": worst}, rows


def cmd_perturb(a):
    from . import modelforms as mf
    from . import perturbation as pt
    form = mf.model_form(a.theta0, a.theta1)
    pf = pt.perturbed_form(form, (a.p, a.q), a.epsilon, a.half_width)
    c = pf.coords
    rest = pt.rest_points_and_linearization(pt.reduced_field(pf), pf)
    idx = pt.surviving_orbit_indices(pf)
    het = pt.gradient_cylinders(pf)
    out = {
        "theta_star": c.theta_star, "L": c.L, "T": c.T, "interval": list(c.I),
        "delta2_pp": c.delta2_pp,
        "rest_points": [{"name": r.name, "point": list(r.point), "type": r.kind,
                         "eigenvalues": list(r.eigenvalues), "predicted_modulus": r.predicted_modulus}
                        for r in rest],
        "indices": {"mu_max": idx.mu_max, "mu_min": idx.mu_min},
        "heteroclinics": [{"start": h.start, "limit_plus": h.limit_plus, "limit_minus": h.limit_minus,
                           "monotone": h.monotone, "s_range": [float(h.s[0]), float(h.s[-1])]}
                          for h in het],
        "smallness_threshold": pf.smallness_threshold,
        "within_threshold": pf.within_threshold,
    }
    if a.orbits:
        out["closed_orbits"] = [{"point": list(o.point), "period": o.period, "links": list(o.links)}
                                for o in pt.closed_orbits(pf)]
    errs = {"identity_defect": float(np.abs(c.identity_matrix() - np.eye(2)).max()),
            "projection_defect": pt.projection_defect(pf),
            "heteroclinic_residual": max(max(h.residual_plus, h.residual_minus) for h in het)}
    return out, errs, out["rest_points"]


def cmd_flow(a):
    from . import s3flow
    scaling = parse_scaling(a.scaling)
    traj = s3flow.integrate_reeb(scaling, parse_point(a.z0), a.time, tol=check_tol(a.tol))
    idx = np.linspace(0, len(traj.t) - 1, min(a.samples, len(traj.t))).round().astype(int)
    rows = [{"t": float(traj.t[i]), "q0": traj.z[i, 0], "p0": traj.z[i, 1], "q1": traj.z[i, 2],
             "p1": traj.z[i, 3]} for i in idx]
    out = {"end": list(traj.z[-1]), "steps": len(traj.t), "samples": rows}
    return out, {"reeb_normalization": s3flow.reeb_normalization_defect(scaling, traj)}, rows


def cmd_orbit_search(a):
    from . import s3flow
    scaling = parse_scaling(a.scaling)
    orbit = s3flow.find_orbit_shooting(scaling, parse_point(a.seed), a.period_guess,
                                       tol=check_tol(a.tol))
    if orbit is None:
        from .errors import NotFound
        raise NotFound("shooting did not converge from this seed")
    out = {"period": orbit.period, "start": list(orbit.start),
           "class": None if orbit.cls is None else [orbit.cls.p, orbit.cls.q],
           "rho": orbit.rho, "cz": orbit.cz, "degenerate": orbit.degenerate}
    return out, {"closing_gap": orbit.gap}, None


def cmd_link(a):
    from . import s3flow
    scaling = parse_scaling(a.scaling)
    traj = s3flow.integrate_reeb(scaling, parse_point(a.z0), a.period)
    gap = float(np.linalg.norm(traj.z[-1] - traj.z[0]))
    w0 = s3flow.polar_winding(traj, 0)
    w1 = s3flow.polar_winding(traj, 1)
    link = s3flow.linking_numbers(traj)
    return {"link0": link[0], "link1": link[1]}, {"gap": gap, "raw_winding": [w0, w1]}, None


def cmd_geodesic(a):
    from . import geodesics as gd
    metric = gd.parse_metric(a.metric)
    if a.satellite:
        p, q = a.satellite
        geo = gd.find_satellite_revolution(metric, p, q)
        rows = [{"t": float(t), "x": float(x), "y": float(y), "z": float(z)}
                for t, (x, y, z) in zip(geo.t[::a.stride], geo.points[::a.stride])]
        out = {"p": p, "q": q, "clairaut_constant": geo.clairaut_constant, "period": geo.period,
               "equator_crossings": geo.crossings, "samples": rows}
        errs = {"speed": geo.speed_defect(), "clairaut": geo.clairaut_defect()}
        return out, errs, rows
    if a.winds:
        p, q = a.winds
        res = gd.satellite_wind_check(metric, p, q, a.epsilon)
        out = {"p": p, "q": q, "wind0": res.winds.wind0, "wind1": res.winds.wind1,
               "expected": list(res.expected), "matches": res.matches, "epsilon": res.epsilon}
        return out, {"rounding_residual": res.winds.residual}, None
    geo = gd.equator(metric)
    r = gd.jacobi_rotation_number(geo)
    out = {"rho": r.value, "period": geo.period, "periods_composed": r.periods}
    errs = {"rho": r.error}
    try:
        out["rho_floquet"] = gd.floquet_rotation(geo)
    except ReebTwistError:
        out["rho_floquet"] = None
    return out, errs, None


def cmd_winds(a):
    from . import geodesics as gd
    spec = a.loop
    if spec in ("a0", "a1"):
        loop = gd.generator_loop(int(spec[1]))
        expected = None
    elif spec in ("a0*a1", "a1*a0", "a0*a0", "a1*a1"):
        loop = gd.concatenate(gd.generator_loop(int(spec[1])), gd.generator_loop(int(spec[4])))
        expected = None
    elif spec.startswith("random"):
        _, kv = parse_kv(spec)
        loop, expected = gd.random_lifted_loop(np.random.default_rng(int(_take("random", kv, {"seed"}).get("seed", 0))))
    elif spec.startswith("satellite"):
        _, kv = parse_kv(spec)
        kv = _take("satellite", kv, {"p", "q", "eps"})
        loop = gd.satellite_loop(int(kv["p"]), int(kv["q"]), kv.get("eps", 1e-2))
        expected = gd.expected_satellite_winds(int(kv["p"]), int(kv["q"]))
    else:
        raise InvalidInput(f"unknown loop {spec!r}")
    w = gd.lift_and_wind(loop)
    out = {"wind0": w.wind0, "wind1": w.wind1, "class": list(w.class_pair)}
    if expected is not None:
        out["expected"] = list(expected)
    return out, {"rounding_residual": w.residual}, None


# --------------------------------------------------------------------------
# parser


def _pair(text):
    return int(text)


def build_parser():
    ap = argparse.ArgumentParser(prog="reebtwist", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file with parameters; flags override it")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--output", help=f"output file (default: stdout, or ${OUTPUT_ENV}/<command>.<format>)")
        p.add_argument("--timing", action="store_true", help="record wall time (breaks byte determinism)")
        return p

    gen_help = "rotation:alpha=A | elliptic:alpha=A | hyperbolic:l=L,a=A,negative=0/1 | constant:s11=,s12=,s22= | random:seed=N"
    for name, func, h in (("cz", cmd_cz, "Conley-Zehnder index of a loop of symmetric matrices"),
                          ("spectrum", cmd_spectrum, "asymptotic operator spectrum and windings")):
        p = add(name, func, h)
        p.add_argument("--generator", required=True, help=gen_help)
        p.add_argument("--window", type=int, default=2)
        p.add_argument("--tol", type=float, default=1e-10 if name == "cz" else 1e-7)
    p = add("iterate", cmd_iterate, "indices and windings of iterates")
    p.add_argument("--generator", required=True, help=gen_help)
    p.add_argument("--k-max", type=int, default=12)
    p = add("rotation", cmd_rotation, "rotation number of a symplectic path")
    p.add_argument("--generator", required=True, help=gen_help)
    p.add_argument("--k-max", type=int, default=2 ** 20)
    for name, func, h in (("twist-enum", cmd_twist_enum, "classes in the twist cone"),
                          ("model-orbits", cmd_model_orbits, "model-form orbits for each cone class")):
        p = add(name, func, h)
        p.add_argument("--theta0", type=float, required=True)
        p.add_argument("--theta1", type=float, required=True)
        p.add_argument("--bound", type=int, default=12)
    p = add("perturb", cmd_perturb, "Morse-Bott perturbation near one invariant torus")
    p.add_argument("--theta0", type=float, required=True)
    p.add_argument("--theta1", type=float, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--half-width", type=float, default=None)
    p.add_argument("--orbits", action="store_true", help="also locate closed orbits by the return map")
    scal_help = "unit | constant:c=C | linear:a=A,b=B | hyperbolic:c=C | model:theta0=,theta1="
    p = add("flow", cmd_flow, "integrate the Reeb flow of f lambda0 on S^3")
    p.add_argument("--scaling", default="unit", help=scal_help)
    p.add_argument("--z0", required=True, help="q0,p0,q1,p1")
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-11)
    p = add("orbit-search", cmd_orbit_search, "closed Reeb orbit by shooting")
    p.add_argument("--scaling", default="unit", help=scal_help)
    p.add_argument("--seed", required=True, help="q0,p0,q1,p1")
    p.add_argument("--period-guess", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p = add("link", cmd_link, "linking numbers of a closed orbit with the Hopf link")
    p.add_argument("--scaling", default="unit", help=scal_help)
    p.add_argument("--z0", required=True, help="q0,p0,q1,p1")
    p.add_argument("--period", type=float, required=True)
    p = add("geodesic", cmd_geodesic, "geodesic rotation numbers, satellites and windings")
    p.add_argument("--metric", default="round", help="round | spheroid:a,c | profile:FILE")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--rho", action="store_true", help="rotation number of the equator (default)")
    mode.add_argument("--satellite", nargs=2, type=int, metavar=("P", "Q"))
    mode.add_argument("--winds", nargs=2, type=int, metavar=("P", "Q"))
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--stride", type=int, default=10, help="sample stride for exported geodesics")
    p = add("winds", cmd_winds, "half-integer windings of a loop in the unit tangent bundle")
    p.add_argument("--loop", required=True, help="a0 | a1 | a0*a1 | random:seed=N | satellite:p=P,q=Q,eps=E")
    return ap


def _apply_config(parser, argv):
    """Parameters from ``--config`` become defaults of the chosen subcommand."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    ns, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if not a.startswith("-")), None)
    choices = parser._subparsers._group_actions[0].choices
    if not ns.config or command not in choices:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(ns.config).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{ns.config}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise InvalidInput(f"cannot read config {ns.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidInput(f"{ns.config}: top level must be an object")
    params = cfg.get("parameters", cfg)
    if not isinstance(params, dict):
        raise InvalidInput(f"{ns.config}: 'parameters' must be an object")
    if cfg.get("command", command) != command:
        raise InvalidInput(f"{ns.config}: command {cfg['command']!r} does not match {command!r}")
    sub = choices[command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    params = {k: v for k, v in params.items() if k != "command"}
    unknown = sorted(set(params) - set(actions))
    if unknown:
        raise InvalidInput(f"{ns.config}: unknown field(s) {unknown}; allowed {sorted(actions)}")
    for key, value in params.items():
        action = actions[key]
        if action.type is not None and value is not None:
            try:
                value = [action.type(v) for v in value] if action.nargs else action.type(value)
            except (TypeError, ValueError) as exc:
                raise InvalidInput(f"{ns.config}: field {key!r}: {exc}") from exc
        if action.choices is not None and value not in action.choices:
            raise InvalidInput(f"{ns.config}: field {key!r} must be one of {list(action.choices)}")
        action.required = False
        sub.set_defaults(**{key: value})
    return parser.parse_args(argv)


def _emit(record, table, fmt, output):
    if fmt == "csv":
        rows = table if table is not None else [record.outputs]
        buf = io.StringIO()
        flat = [{k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()} for r in rows]
        writer = csv.DictWriter(buf, fieldnames=list(flat[0]) if flat else [], lineterminator="\n")
        writer.writeheader()
        writer.writerows(flat)
        text = buf.getvalue()
    else:
        text = record.to_json()
    if output is None and os.environ.get(OUTPUT_ENV):
        output = str(Path(os.environ[OUTPUT_ENV]) / f"{record.command}.{fmt}")
    if output:
        Path(output).parent.mkdir(parents=True, exist_ok=True)
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def run(args):
    """Execute parsed arguments; returns ``(record, table)``."""
    skip = {"func", "config", "format", "output", "timing", "command"}
    params = {k: jsonable(v) for k, v in sorted(vars(args).items()) if k not in skip}
    start = time.perf_counter()
    outputs, errors, table = args.func(args)
    record = ResultRecord(args.command, params, digest(args.command, params), jsonable(outputs),
                          jsonable(errors), __version__)
    if args.timing:
        record.wall_time = time.perf_counter() - start
    return record, jsonable(table) if table is not None else None


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = _apply_config(parser, argv)
    except InvalidInput as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    try:
        record, table = run(args)
    except ReebTwistError as exc:
        code = 2 if exc.domain else 1
        err = {"schema": SCHEMA, "command": args.command, "status": "error",
               "error": {"type": type(exc).__name__, "message": str(exc), "domain": exc.domain}}
        sys.stdout.write(json.dumps(err, sort_keys=True, indent=2) + "\n")
        return code
    except Exception as exc:  # internal failure
        err = {"schema": SCHEMA, "command": args.command, "status": "error",
               "error": {"type": type(exc).__name__, "message": str(exc), "domain": False}}
        sys.stdout.write(json.dumps(err, sort_keys=True, indent=2) + "\n")
        return 1
    _emit(record, table, args.format, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
