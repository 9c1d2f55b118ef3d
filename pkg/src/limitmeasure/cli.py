"""Config-driven command line entry point.

A run is described by an INI file::

    [experiment]
    system = prnot
    command = quasipotential
    output_dir = runs/prnot-qp
    master_seed = 0

    [parameters]
    x = (0, 0)
    y = (1, 0)

Values are numbers, points ``(a, b)``, lists ``[a, b, c]``, booleans or
region literals such as ``CircleShell((0, 0), sqrt(2), 0.1)``; ``pi`` and
``sqrt`` are available in numeric expressions.  ``--out``, ``--seed`` and
``--system`` override the file.  Every run writes ``config.ini`` (all
parameters resolved, defaults included), its CSV artifacts and
``report.txt`` into the output directory; nothing is written unless the
run completes.

Exit status: 0 success, 2 a ``validate`` check failed, 1 bad configuration
or operational error.
"""
import argparse
import ast
import configparser
import math
import os
import re
import sys
import tempfile

import numpy as np

from . import export
from .corpus import builtin_corpus, get_system
from .errors import EscapeError, InvalidSystemError, LimitCheckError
from .regions import Annulus, Ball, CircleShell, Union, describe
from .systems import ClassifyHint, catalog_text

COMMANDS = ("corpus-list", "simulate", "quasipotential", "classify", "scan", "validate")
EXIT_OK, EXIT_ERROR, EXIT_VALIDATION = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line

    def __str__(self):
        msg = super().__str__()
        return f"line {self.line}: {msg}" if self.line else msg


# --- literal parsing -------------------------------------------------------------

_REGIONS = {"Ball": Ball, "Annulus": Annulus, "CircleShell": CircleShell, "Union": Union}
_NAMES = {"pi": math.pi}
_FUNCS = {"sqrt": math.sqrt}
_BINOPS = {ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
           ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
           ast.Pow: lambda a, b: a ** b}


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, (ast.Tuple, ast.List)):
        return tuple(_eval(e) for e in node.elts)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        args = [_eval(a) for a in node.args]
        kwargs = {k.arg: _eval(k.value) for k in node.keywords}
        if name in _FUNCS:
            return _FUNCS[name](*args)
        if name == "Union":
            return Union(list(args[0]) if len(args) == 1 and isinstance(args[0], tuple) else args)
        if name in _REGIONS:
            return _REGIONS[name](*args, **kwargs)
    raise ValueError(f"unsupported expression {ast.unparse(node)!r}")


def parse_literal(text):
    try:
        return _eval(ast.parse(text.strip(), mode="eval").body)
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {text.strip()!r}") from exc
    except TypeError as exc:
        raise ValueError(str(exc)) from exc


def _number(text):
    v = parse_literal(text)
    if not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {text.strip()!r}")
    return float(v)


def _integer(text):
    v = parse_literal(text)
    if not isinstance(v, (int, float)) or v != int(v):
        raise ValueError(f"expected an integer, got {text.strip()!r}")
    return int(v)


def _numbers(text):
    v = parse_literal(text)
    if isinstance(v, (int, float)):
        v = (v,)
    if not isinstance(v, tuple) or not all(isinstance(e, (int, float)) for e in v):
        raise ValueError(f"expected a list of numbers, got {text.strip()!r}")
    return tuple(float(e) for e in v)


def _box(text):
    v = parse_literal(text)
    try:
        box = tuple((float(lo), float(hi)) for lo, hi in v)
    except (TypeError, ValueError):
        raise ValueError(f"expected a box [(lo, hi), ...], got {text.strip()!r}") from None
    return box


def _region(text):
    v = parse_literal(text)
    if not isinstance(v, tuple(_REGIONS.values())):
        raise ValueError(f"expected a region literal, got {text.strip()!r}")
    return v


def _flag(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true/false, got {text.strip()!r}")


def _words(text):
    return tuple(w.strip() for w in text.split(",") if w.strip())


def render(v):
    """Inverse of the parsers, used for the resolved config."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, tuple) and all(isinstance(e, str) for e in v):
        return ", ".join(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(render(e) for e in v) + ("," if len(v) == 1 else "") + ")"
    if isinstance(v, (Ball, Annulus, CircleShell, Union)):
        return _region_literal(v)
    return str(v)


def _region_literal(r):
    if isinstance(r, Ball):
        return f"Ball({render(r.center)}, {render(r.radius)})"
    if isinstance(r, Annulus):
        return f"Annulus({render(r.center)}, {render(r.r_in)}, {render(r.r_out)})"
    if isinstance(r, CircleShell):
        return f"CircleShell({render(r.center)}, {render(r.radius)}, {render(r.half_width)})"
    return "Union([" + ", ".join(_region_literal(p) for p in r.parts) + "])"


# --- schema ------------------------------------------------------------------------

REQUIRED = object()
DERIVED = object()

_SIM = {
    "epsilon": (_number, 0.5),
    "dt": (_number, 1e-3),
    "n_steps": (_integer, 1_000_000),
    "burn_in": (_integer, DERIVED),
    "x0": (_numbers, DERIVED),
    "box": (_box, DERIVED),
    "bins": (_integer, 80),
    "n_batches": (_integer, 20),
}

SCHEMA = {
    "corpus-list": {},
    "simulate": dict(_SIM),
    "quasipotential": {
        "x": (_numbers, REQUIRED),
        "y": (_numbers, REQUIRED),
        "n_segments": (_integer, 200),
        "T_grid": (_numbers, (1.0, 2.0, 4.0, 8.0, 16.0)),
        "refine": (_flag, True),
    },
    "classify": {
        "region": (_region, DERIVED),
        "shell_delta": (_number, DERIVED),
        "n_samples": (_integer, DERIVED),
        "escape_T": (_number, DERIVED),
        "dt": (_number, DERIVED),
    },
    "scan": dict(_SIM, region=(_region, REQUIRED), epsilons=(_numbers, REQUIRED)),
    "validate": dict(
        _SIM,
        checks=(_words, DERIVED),
        tv_max=(_number, 0.15),
        slope_rtol=(_number, 0.10),
        r2_min=(_number, 0.95),
        region=(_region, DERIVED),
        epsilons=(_numbers, DERIVED),
        kappa_min=(_number, 0.45),
        kappa_max=(_number, 0.75),
        scan_r2_min=(_number, 0.9),
    ),
}
_EXPERIMENT_KEYS = ("system", "command", "output_dir", "master_seed")
_CHECKS = ("regions", "density", "decay")


def _line_index(text):
    """``{(section, key): line}`` and ``{section: line}`` from the raw file."""
    keys, sections = {}, {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            sections.setdefault(section, n)
            continue
        m = re.match(r"^([^=:\s][^=:]*?)\s*[=:]", raw)
        if m and section is not None and not raw[:1].isspace():
            keys.setdefault((section, m.group(1).strip()), n)
    return keys, sections


def load_config(text, overrides=None):
    """Parse and resolve a config; returns ``(experiment, parameters)`` dictionaries.

    Raises
    ------
    ConfigError
        With the offending line for unknown sections/keys and bad values.
    """
    overrides = overrides or {}
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None
    keys, sections = _line_index(text)
    for sec in cp.sections():
        if sec not in ("experiment", "parameters"):
            raise ConfigError(f"unknown section [{sec}]", sections.get(sec))
    exp_sec = cp["experiment"] if cp.has_section("experiment") else {}
    for k in exp_sec:
        if k not in _EXPERIMENT_KEYS:
            raise ConfigError(f"unknown key {k!r} in [experiment]", keys.get(("experiment", k)))
    experiment = {k: exp_sec[k].strip() for k in exp_sec}
    experiment.update({k: v for k, v in overrides.items() if v is not None})
    command = experiment.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {', '.join(COMMANDS)}, got {command!r}",
                          keys.get(("experiment", "command")))
    try:
        experiment["master_seed"] = _integer(str(experiment.get("master_seed", "0")))
    except ValueError as exc:
        raise ConfigError(str(exc), keys.get(("experiment", "master_seed"))) from None
    if command != "corpus-list" and "system" not in experiment:
        raise ConfigError("missing key 'system' in [experiment]", sections.get("experiment"))
    schema = SCHEMA[command]
    par_sec = cp["parameters"] if cp.has_section("parameters") else {}
    params = {}
    for k in par_sec:
        line = keys.get(("parameters", k))
        if k not in schema:
            raise ConfigError(f"unknown key {k!r} in [parameters] for command {command!r}", line)
        parser = schema[k][0]
        try:
            params[k] = parser(par_sec[k])
        except ValueError as exc:
            raise ConfigError(f"{k}: {exc}", line) from None
    for k, (_, default) in schema.items():
        if k in params:
            continue
        if default is REQUIRED:
            raise ConfigError(f"missing required key {k!r} in [parameters]",
                              sections.get("parameters", sections.get("experiment")))
        params[k] = default
    return experiment, params


def _resolve(spec, command, params, experiment):
    """Fill DERIVED defaults from the system; returns a new dict."""
    p = dict(params)
    if "x0" in p and p["x0"] is DERIVED:
        comps = spec.metadata.expected_limit.components
        pt = getattr(comps[0], "point", None) if comps else None
        p["x0"] = tuple(float(v) for v in pt) if pt is not None else (0.0,) * spec.dim
    if "box" in p and p["box"] is DERIVED:
        half = float(np.floor(10.0 * min(spec.safe_radius, 3.0) / np.sqrt(spec.dim)) / 10.0)
        p["box"] = tuple((-half, half) for _ in range(spec.dim))
    if "burn_in" in p and p["burn_in"] is DERIVED:
        p["burn_in"] = int(p["n_steps"]) // 20
    if command == "classify":
        for k in ("shell_delta", "escape_T", "dt", "n_samples"):
            if p[k] is DERIVED and p["region"] is not DERIVED:
                p[k] = getattr(ClassifyHint(), k)
    if command == "validate":
        if p["region"] is DERIVED:
            p["region"] = None
        if p["epsilons"] is DERIVED:
            p["epsilons"] = None
        if p["checks"] is DERIVED:
            checks = ["regions"]
            if spec.metadata.exact_density_potential is not None:
                checks.append("density")
            if p["region"] is not None and p["epsilons"] is not None:
                checks.append("decay")
            p["checks"] = tuple(checks)
        for c in p["checks"]:
            if c not in _CHECKS:
                raise ConfigError(f"unknown check {c!r}; known: {', '.join(_CHECKS)}")
        if "decay" in p["checks"] and (p["region"] is None or p["epsilons"] is None):
            raise ConfigError("the decay check needs 'region' and 'epsilons'")
    if "x0" in p and len(p["x0"]) != spec.dim:
        raise ConfigError(f"x0 must have {spec.dim} coordinates")
    return p


def resolved_config_text(experiment, params):
    lines = ["[experiment]"]
    for k in _EXPERIMENT_KEYS:
        if k in experiment:
            lines.append(f"{k} = {render(experiment[k])}")
    lines += ["", "[parameters]"]
    for k, v in params.items():
        if v is DERIVED:
            v = "per-region hint"
        if v is None:
            continue
        lines.append(f"{k} = {render(v)}")
    return "\n".join(lines) + "\n"


# --- commands ----------------------------------------------------------------------

def _sim_config(p, seed, epsilon=None):
    from .montecarlo import SimConfig
    return SimConfig(p["epsilon"] if epsilon is None else epsilon, p["dt"], p["n_steps"], p["x0"],
                     seed, p["burn_in"])


def _cmd_simulate(spec, p, seed, files, report):
    from .montecarlo import occupation_histogram, region_mass
    h = occupation_histogram(spec, _sim_config(p, seed), p["box"], p["bins"], p["n_batches"])
    files["histogram.csv"] = export.histogram_csv(h)
    report.append(f"kept steps: {h.n_samples}")
    report.append(f"out_of_box_mass: {export.fmt(h.out_of_box_mass)}")
    rows = []
    for lr in spec.metadata.invariant_regions:
        m, se = region_mass(h, lr.region, return_se=True)
        rows.append([lr.label, lr.note, describe(lr.region), m, se])
        report.append(f"mass {lr.label} {describe(lr.region)}: {export.fmt(m)} "
                      f"(batch-means s.e. {export.fmt(se)})")
    files["region_masses.csv"] = export.table_csv(
        ["label", "note", "region", "mass", "std_error"], rows)
    return EXIT_OK


def _cmd_quasipotential(spec, p, seed, files, report):
    from .quasipotential import quasipotential
    r = quasipotential(spec, p["x"], p["y"], n_segments=p["n_segments"], T_grid=p["T_grid"],
                       refine=p["refine"], return_result=True)
    dim = spec.dim
    header = ([f"x_{i + 1}" for i in range(dim)] + [f"y_{i + 1}" for i in range(dim)]
              + ["value", "T_used", "n_segments", "optimizer_iters", "converged"])
    files["quasipotential.csv"] = export.table_csv(
        header, [list(p["x"]) + list(p["y"]) + [r.value, r.T_used, r.n_segments,
                                                 r.optimizer_iters, r.converged]])
    files["path.csv"] = export.path_csv(r.path)
    report.append(f"V(x, y) estimate: {export.fmt(r.value)}")
    report.append(f"T_used: {export.fmt(r.T_used)}; converged: {export.fmt(r.converged)}")
    return EXIT_OK


def _classify_jobs(spec, p):
    if p["region"] is not DERIVED:
        return [("region", p["region"], None, p["shell_delta"], p["escape_T"], p["dt"],
                 p["n_samples"])]
    jobs = []
    for lr in spec.metadata.invariant_regions:
        if lr.hint is None:
            continue
        h = lr.hint
        jobs.append((lr.note or lr.label, lr.region, lr.label,
                     h.shell_delta if p["shell_delta"] is DERIVED else p["shell_delta"],
                     h.escape_T if p["escape_T"] is DERIVED else p["escape_T"],
                     h.dt if p["dt"] is DERIVED else p["dt"],
                     h.n_samples if p.get("n_samples", DERIVED) is DERIVED else p["n_samples"]))
    return jobs


def _run_classify(spec, p):
    from .flow import classify_region
    out = []
    for name, region, expected, delta, T, dt, n in _classify_jobs(spec, p):
        c = classify_region(spec, region, delta, n, T, dt)
        out.append((name, region, expected, c, delta, T, dt))
    return out


def _cmd_classify(spec, p, seed, files, report):
    rows = []
    for name, region, expected, c, delta, T, dt in _run_classify(spec, p):
        rows.append([name, describe(region), c.label, expected, c.forward_escape_time,
                     c.backward_escape_time, c.samples_used, delta, T, dt, c.diagnostic])
        report.append(f"{name}: {c.label}" + (f" (expected {expected})" if expected else ""))
    files["classification.csv"] = export.table_csv(
        ["name", "region", "label", "expected", "forward_escape_time", "backward_escape_time",
         "samples_used", "shell_delta", "escape_T", "dt", "diagnostic"], rows)
    return EXIT_OK


def _scan(spec, p, master_seed):
    from .montecarlo import concentration_scan
    return concentration_scan(spec, p["region"], p["epsilons"], p["dt"], p["n_steps"], p["x0"],
                              p["box"], p["bins"], master_seed, p["burn_in"], p["n_batches"])


def _cmd_scan(spec, p, seed, files, report):
    fit = _scan(spec, p, seed)
    files["decay.csv"] = export.decay_csv(fit)
    report.append(f"kappa_hat: {export.fmt(fit.kappa_hat)}")
    report.append(f"r_squared: {export.fmt(fit.r_squared)}")
    if fit.lower_confidence:
        report.append("note: some masses were zero and use a one-count floor")
    return EXIT_OK


def _cmd_validate(spec, p, seed, files, report):
    from .montecarlo import compare_to_density, derived_seeds, occupation_histogram
    rows = []

    def check(name, value, tolerance, ok):
        rows.append([name, value, tolerance, "PASS" if ok else "FAIL"])
        report.append(f"{name}: {export.fmt(value)} [{tolerance}] {'PASS' if ok else 'FAIL'}")

    seeds = derived_seeds(seed, 2)
    if "regions" in p["checks"]:
        for name, region, expected, c, *_ in _run_classify(spec, dict(p, region=DERIVED,
                                                                      shell_delta=DERIVED,
                                                                      escape_T=DERIVED,
                                                                      dt=DERIVED,
                                                                      n_samples=DERIVED)):
            check(f"label {name}", c.label, f"expected {expected}", c.label == expected)
    if "density" in p["checks"]:
        U = spec.metadata.exact_density_potential
        if U is None:
            raise ConfigError(f"system {spec.name!r} has no exact density")
        h = occupation_histogram(spec, _sim_config(p, seeds[0]), p["box"], p["bins"],
                                 p["n_batches"])
        files["histogram.csv"] = export.histogram_csv(h)
        cmp = compare_to_density(h, U, p["epsilon"])
        check("tv_distance", cmp.tv_distance, f"<= {p['tv_max']:g}", cmp.tv_distance <= p["tv_max"])
        rel = abs(cmp.log_slope / cmp.expected_slope - 1.0)
        check("log_slope", cmp.log_slope,
              f"within {p['slope_rtol']:g} of {cmp.expected_slope:g}", rel <= p["slope_rtol"])
        check("log_slope_r_squared", cmp.r_squared, f">= {p['r2_min']:g}",
              cmp.r_squared >= p["r2_min"])
    if "decay" in p["checks"]:
        fit = _scan(spec, p, seeds[1])
        files["decay.csv"] = export.decay_csv(fit)
        check("kappa_hat", fit.kappa_hat, f"in [{p['kappa_min']:g}, {p['kappa_max']:g}]",
              p["kappa_min"] <= fit.kappa_hat <= p["kappa_max"])
        check("decay_r_squared", fit.r_squared, f">= {p['scan_r2_min']:g}",
              fit.r_squared >= p["scan_r2_min"])
    files["validation.csv"] = export.table_csv(["check", "value", "tolerance", "result"], rows)
    failed = [r for r in rows if r[3] == "FAIL"]
    report.append(f"validation: {len(rows) - len(failed)} of {len(rows)} checks passed")
    return EXIT_VALIDATION if failed else EXIT_OK


_HANDLERS = {"simulate": _cmd_simulate, "quasipotential": _cmd_quasipotential,
             "classify": _cmd_classify, "scan": _cmd_scan, "validate": _cmd_validate}


# --- output ------------------------------------------------------------------------

def commit_files(out_dir, files):
    """Write every file to a temporary name in ``out_dir`` then rename them into place."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            with os.fdopen(fd, "w", newline="") as f:
                f.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except OSError:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def run_experiment(config_text, overrides=None, stdout=None):
    """Run one configured experiment; returns the exit status."""
    stdout = stdout or sys.stdout
    experiment, params = load_config(config_text, overrides)
    command = experiment["command"]
    out_dir = experiment.get("output_dir")
    if command == "corpus-list":
        text = catalog_text(builtin_corpus())
        stdout.write(text)
        if out_dir:
            commit_files(out_dir, {"corpus.txt": text,
                                   "config.ini": resolved_config_text(experiment, params)})
        return EXIT_OK
    if not out_dir:
        raise ConfigError("missing key 'output_dir' in [experiment] (or pass --out)")
    spec = get_system(experiment["system"])
    params = _resolve(spec, command, params, experiment)
    files = {}
    report = [f"command: {command}", f"system: {spec.name}",
              f"master_seed: {experiment['master_seed']}"]
    status = _HANDLERS[command](spec, params, experiment["master_seed"], files, report)
    files["config.ini"] = resolved_config_text(experiment, params)
    files["report.txt"] = "\n".join(report) + "\n"
    commit_files(out_dir, files)
    stdout.write(files["report.txt"])
    return status


def main(argv=None):
    ap = argparse.ArgumentParser(prog="limitmeasure",
                                 description="Quasipotentials and small-noise limit measures.")
    ap.add_argument("command", nargs="?", choices=COMMANDS,
                    help="overrides the command given in the config")
    ap.add_argument("--config", help="INI file with [experiment] and [parameters]")
    ap.add_argument("--out", help="output directory (overrides output_dir)")
    ap.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
    ap.add_argument("--system", help="corpus system (overrides system)")
    args = ap.parse_args(argv)
    try:
        if args.config:
            with open(args.config) as f:
                text = f.read()
        elif args.command == "corpus-list":
            text = ""
        else:
            raise ConfigError("--config is required for this command")
        overrides = {"command": args.command, "output_dir": args.out, "system": args.system,
                     "master_seed": None if args.seed is None else str(args.seed)}
        return run_experiment(text, overrides)
    except ConfigError as exc:
        where = f"{args.config}:" if args.config and exc.line else ""
        sys.stderr.write(f"config error: {where}{exc}\n")
    except (EscapeError, InvalidSystemError, LimitCheckError, KeyError, ValueError,
            OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
