"""Command-line entry point: ``qe3d <command> [options]``.

Commands
  classify  label a parameter tuple and attach ODE evidence
  solve     integrate one profile problem and emit a CSV table
  build     assemble a space and describe it
  verify    build a space and run every residual check
  sweep     classify every tuple of a parameter lattice
  export    re-serialize a stored JSON report as JSON or CSV

Exit status: 0 success, 1 bad configuration, 2 classification outside the
taxonomy, 3 verification or witness failure.
"""

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

from . import serialize
from .builders import build_space
from .classifier import (
    FAMILIES,
    classify,
    completeness_witness,
    incompleteness_witness,
)
from .errors import (
    DomainError,
    InconsistentBuildError,
    QEError,
    SingularProfileError,
    WitnessFailure,
)
from .ode import PROBLEMS, integrate
from .presets import PRESETS, get_preset, preset_space
from .verifier import frame_data, verify_space

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_OUTSIDE = 2
EXIT_VERIFY = 3

COMMANDS = ("classify", "solve", "build", "verify", "sweep", "export")
PARAM_ALIASES = {"lambda": "lam", "slope0": "slope0"}
DEFAULT_NUMERICS = {
    "step": 1e-3,
    "span": [-10.0, 10.0],
    "grid": 21,
    "tol": 1e-6,
    "tol_codazzi": 1e-5,
    "tol_eigen": 1e-7,
    "jobs": 1,
    "every": 1,
    "witness": True,
}
PROBLEM_FIELDS = {
    "kobayashi-p": ("rho", "a", "m"),
    "eta": ("lam", "m"),
    "radial-p": ("lam", "a", "m"),
    "tau": ("k", "m"),
    "potential-w": ("a", "m"),
    "lcf": ("lam", "m", "k"),
}


class ConfigError(Exception):
    """The configuration does not parse or does not validate."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "command" not in data:
            raise ConfigError("config needs a command")
        params = {PARAM_ALIASES.get(k, k): v for k, v in dict(data.get("params", {})).items()}
        cfg = cls(
            command=data["command"],
            params=params,
            numerics={**DEFAULT_NUMERICS, **dict(data.get("numerics", {}))},
            output={"path": None, "format": "json", **dict(data.get("output", {}))},
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        n = self.numerics
        unknown = set(n) - set(DEFAULT_NUMERICS)
        if unknown:
            raise ConfigError(f"unknown numerics keys: {sorted(unknown)}")
        try:
            step = float(n["step"])
            tols = [float(n[k]) for k in ("tol", "tol_codazzi", "tol_eigen")]
            lo, hi = (float(x) for x in n["span"])
            grid = int(n["grid"])
            jobs = int(n["jobs"])
            every = int(n["every"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed numerics: {exc}") from None
        if not 0 < step <= 0.1:
            raise ConfigError("step must lie in (0, 0.1]")
        if any(not t > 0 for t in tols):
            raise ConfigError("tolerances must be positive")
        if not lo <= 0 <= hi or hi - lo <= 0:
            raise ConfigError("span must contain 0 and have positive length")
        if grid < 3 or jobs < 1 or every < 1:
            raise ConfigError("grid >= 3, jobs >= 1 and every >= 1 are required")
        if self.output.get("format") not in ("json", "csv"):
            raise ConfigError("output format must be json or csv")
        p = self.params
        if self.command in ("classify", "sweep") and "family" not in p:
            raise ConfigError(f"{self.command} needs params.family")
        if self.command == "solve" and "problem" not in p:
            raise ConfigError("solve needs params.problem")
        if self.command in ("build", "verify") and "preset" not in p and "family" not in p:
            raise ConfigError(f"{self.command} needs params.preset or params.family")
        if self.command == "export" and "input" not in p:
            raise ConfigError("export needs params.input")
        if "family" in p and p["family"] not in FAMILIES:
            raise ConfigError(f"unknown family {p['family']!r}; choose from {sorted(FAMILIES)}")
        if "problem" in p and p["problem"] not in PROBLEM_FIELDS:
            raise ConfigError(f"unknown problem {p['problem']!r}; choose from {sorted(PROBLEM_FIELDS)}")
        if "preset" in p and p["preset"] not in PRESETS:
            raise ConfigError(f"unknown preset {p['preset']!r}; choose from {sorted(PRESETS)}")


def _family_params(p):
    cls = FAMILIES[p["family"]]
    kwargs = {}
    for f in fields(cls):
        if f.name in p and p[f.name] is not None:
            kwargs[f.name] = p[f.name]
        elif f.name != "slope_sign":
            raise ConfigError(f"family {p['family']} needs parameter {f.name!r}")
    try:
        if "m" in kwargs:
            if float(kwargs["m"]) != int(float(kwargs["m"])):
                raise ConfigError("m must be an integer")
            kwargs["m"] = int(float(kwargs["m"]))
        if "slope_sign" in kwargs:
            kwargs["slope_sign"] = 1 if float(kwargs["slope_sign"]) >= 0 else -1
        for k, v in kwargs.items():
            if k not in ("m", "slope_sign"):
                kwargs[k] = float(v)
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


@dataclass
class Outcome:
    code: int
    payload: dict
    text: str = None  # raw text (CSV) to print instead of JSON


def _witness_summary(params, result, numerics):
    if not numerics.get("witness", True):
        return None
    span = tuple(float(x) for x in numerics["span"])
    if result.complete:
        return completeness_witness(params, step=numerics["step"], span=span).to_dict()
    if result.subcase == "condition-V":
        return incompleteness_witness(params, step=numerics["step"], span=(2 * span[0], 2 * span[1])).to_dict()
    return None


def _classify_record(params, numerics):
    result = classify(params)
    record = result.to_dict()
    try:
        record["witness"] = _witness_summary(params, result, numerics)
    except (WitnessFailure, QEError) as exc:
        record["witness"] = {"error": type(exc).__name__, "message": str(exc),
                             "lemma": getattr(exc, "lemma", None)}
    return result, record


def cmd_classify(cfg):
    params = _family_params(cfg.params)
    result, record = _classify_record(params, cfg.numerics)
    code = EXIT_OK
    if result.label == "outside":
        code = EXIT_OUTSIDE
    elif isinstance(record.get("witness"), dict) and "error" in record["witness"]:
        code = EXIT_VERIFY
    return Outcome(code, serialize.envelope("classification", record))


def _problem(p):
    kind = p["problem"]
    kwargs = {}
    for name in PROBLEM_FIELDS[kind]:
        if p.get(name) is None:
            raise ConfigError(f"problem {kind} needs parameter {name!r}")
        kwargs[name] = int(float(p[name])) if name == "m" else float(p[name])
    if p.get("level") is not None:
        kwargs["level"] = float(p["level"])
    return PROBLEMS[kind](**kwargs)


def cmd_solve(cfg):
    p, n = cfg.params, cfg.numerics
    problem = _problem(p)
    if problem.n_components == 1:
        missing = [k for k in ("p0", "slope0") if p.get(k) is None]
        if missing:
            raise ConfigError(f"solve needs {missing}")
        init = (float(p["p0"]), float(p["slope0"]))
    else:
        keys = ("h0", "dh0", "w0", "dw0")
        if any(p.get(k) is None for k in keys):
            raise ConfigError("the lcf problem needs h0, dh0, w0 and dw0")
        h0, dh0, w0, dw0 = (float(p[k]) for k in keys)
        init = ((h0, w0), (dh0, dw0))
    try:
        sol = integrate(problem, init, step=float(n["step"]), span=tuple(n["span"]))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    summary = {
        "problem": problem.kind,
        "params": {k: v for k, v in problem.params().items()},
        "level": sol.level,
        "span": list(sol.span),
        "step": sol.step,
        "max_drift": sol.max_drift,
        "drift_rate": sol.drift_rate,
        "positivity_floor": sol.positivity_floor,
        "exits": dict(sol.exits),
        "nodes": int(sol.s.size),
    }
    csv = serialize.solution_csv(sol, every=int(n["every"]))
    return Outcome(EXIT_OK, serialize.envelope("solve", summary), text=csv)


def _space(cfg):
    p = cfg.params
    if "preset" in p:
        return preset_space(p["preset"], step=float(cfg.numerics["step"])), get_preset(p["preset"]).chart
    params = _family_params(p)
    chart = p.get("chart")
    if chart is None:
        raise ConfigError("a family build needs params.chart as three [lo, hi] pairs")
    try:
        space = build_space(p.get("label"), params, chart=chart, step=float(cfg.numerics["step"]))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, InconsistentBuildError):
            raise
        raise ConfigError(str(exc)) from None
    return space, chart


def _describe(space, chart):
    return {
        "label": space.label,
        "lambda": space.lam,
        "m": space.m,
        "mu_expected": space.mu_expected,
        "regime": space.regime,
        "chart": [list(r) for r in chart],
        "params": {k: v for k, v in sorted(space.params.items())},
        "provenance": space.w.provenance,
    }


def cmd_build(cfg):
    space, chart = _space(cfg)
    desc = _describe(space, chart)
    center = [0.5 * (lo + hi) for lo, hi in chart]
    try:
        desc["frame_at_center"] = frame_data(space, center).to_dict()
    except QEError as exc:
        desc["frame_at_center"] = {"error": type(exc).__name__, "message": str(exc)}
    return Outcome(EXIT_OK, serialize.envelope("build", desc))


def cmd_verify(cfg):
    space, chart = _space(cfg)
    n = cfg.numerics
    grid = space.chart.grid_points(int(n["grid"]))
    bundle = verify_space(space, grid, tol=float(n["tol"]), tol_codazzi=float(n["tol_codazzi"]),
                          tol_eigen=float(n["tol_eigen"]))
    payload = {"space": _describe(space, chart), **bundle.to_dict()}
    return Outcome(EXIT_OK if bundle.passed else EXIT_VERIFY, serialize.envelope("verification", payload))


def _lattice(p):
    keys = sorted(k for k in p if k != "family")
    axes = [p[k] if isinstance(p[k], list) else [p[k]] for k in keys]
    for combo in itertools.product(*axes):
        yield {"family": p["family"], **dict(zip(keys, combo))}


def cmd_sweep(cfg):
    tuples = list(_lattice(cfg.params))
    numerics = cfg.numerics

    def one(pdict):
        try:
            params = _family_params(pdict)
        except (ConfigError, ValueError) as exc:
            return {"params": pdict, "error": str(exc)}
        _, record = _classify_record(params, numerics)
        return record

    with ThreadPoolExecutor(max_workers=int(numerics["jobs"])) as pool:
        records = list(pool.map(one, tuples))  # map keeps lattice order
    counts = {}
    for r in records:
        lab = r.get("label", "invalid")
        counts[lab] = counts.get(lab, 0) + 1
    payload = {"count": len(records), "labels": counts, "records": records}
    return Outcome(EXIT_OK, serialize.envelope("sweep", payload))


def cmd_export(cfg):
    path = cfg.params["input"]
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if cfg.output.get("format") == "csv":
        records = data.get("records") if isinstance(data, dict) and "records" in data else [data]
        return Outcome(EXIT_OK, data, text=serialize.records_csv(records))
    return Outcome(EXIT_OK, data)


HANDLERS = {
    "classify": cmd_classify,
    "solve": cmd_solve,
    "build": cmd_build,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "export": cmd_export,
}


def run(cfg):
    """Execute a validated configuration; returns an :class:`Outcome`."""
    try:
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        return _error(EXIT_CONFIG, "ConfigError", str(exc))
    except (WitnessFailure, SingularProfileError, QEError) as exc:
        code = EXIT_CONFIG if isinstance(exc, InconsistentBuildError) else EXIT_VERIFY
        return _error(code, type(exc).__name__, str(exc), getattr(exc, "lemma", None))


def _error(code, kind, message, lemma=None):
    err = {"type": kind, "code": code, "message": message}
    if lemma:
        err["lemma"] = lemma
    return Outcome(code, {"schema_version": serialize.SCHEMA_VERSION, "error": err})


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_family(sp, multi=False):
    nargs = "+" if multi else None
    sp.add_argument("--family", choices=sorted(FAMILIES))
    for flag, dest in (("--lambda", "lam"), ("--m", "m"), ("--a", "a"), ("--rho", "rho"),
                       ("--k", "k"), ("--mu", "mu"), ("--p0", "p0"), ("--w0", "w0"),
                       ("--slope-sign", "slope_sign")):
        sp.add_argument(flag, dest=dest, type=float, nargs=nargs)


def _add_numerics(sp):
    sp.add_argument("--step", type=float)
    sp.add_argument("--span", type=float, nargs=2, metavar=("LO", "HI"))
    sp.add_argument("--grid", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--tol-codazzi", dest="tol_codazzi", type=float)
    sp.add_argument("--tol-eigen", dest="tol_eigen", type=float)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--every", type=int, help="keep every n-th node in CSV output")
    sp.add_argument("--no-witness", dest="witness", action="store_false", default=None)
    sp.add_argument("--output", "-o", dest="path")
    sp.add_argument("--format", choices=("json", "csv"))


def build_parser():
    parser = _Parser(prog="qe3d", description="3-d quasi-Einstein spaces: classify, solve, verify.")
    parser.add_argument("--config", help="JSON run configuration")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("classify", help="label a parameter tuple")
    _add_family(sp)
    _add_numerics(sp)

    sp = sub.add_parser("solve", help="integrate a profile problem")
    sp.add_argument("--problem", choices=sorted(PROBLEM_FIELDS))
    for flag, dest in (("--lambda", "lam"), ("--m", "m"), ("--a", "a"), ("--rho", "rho"),
                       ("--k", "k"), ("--level", "level"), ("--p0", "p0"), ("--slope0", "slope0"),
                       ("--h0", "h0"), ("--dh0", "dh0"), ("--w0", "w0"), ("--dw0", "dw0")):
        sp.add_argument(flag, dest=dest, type=float)
    sp.add_argument("--summary", help="write the drift summary JSON here")
    _add_numerics(sp)

    for name in ("build", "verify"):
        sp = sub.add_parser(name, help=f"{name} a space")
        sp.add_argument("--preset", choices=sorted(PRESETS))
        _add_family(sp)
        sp.add_argument("--chart", type=float, nargs=6, metavar="X", help="x1lo x1hi x2lo x2hi x3lo x3hi")
        _add_numerics(sp)

    sp = sub.add_parser("sweep", help="classify a parameter lattice")
    _add_family(sp, multi=True)
    _add_numerics(sp)

    sp = sub.add_parser("export", help="re-serialize a stored report")
    sp.add_argument("input")
    _add_numerics(sp)
    return parser


NUMERIC_KEYS = tuple(DEFAULT_NUMERICS)
OUTPUT_KEYS = ("path", "format")
SKIP_KEYS = ("command", "config", "summary")


def config_from_args(ns):
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if ns.command and isinstance(data, dict):
            data.setdefault("command", ns.command)
        return RunConfig.from_dict(data)
    if not ns.command:
        raise ConfigError("a command or --config is required")
    params, numerics, output = {}, {}, {}
    for key, val in vars(ns).items():
        if val is None or key in SKIP_KEYS:
            continue
        if key in NUMERIC_KEYS:
            numerics[key] = list(val) if key == "span" else val
        elif key in OUTPUT_KEYS:
            output[key] = val
        elif key == "chart":
            params["chart"] = [val[0:2], val[2:4], val[4:6]]
        else:
            params[key] = val
    return RunConfig.from_dict(
        {"command": ns.command, "params": params, "numerics": numerics, "output": output}
    )


def _status(path, code):
    return serialize.dumps({"schema_version": serialize.SCHEMA_VERSION, "written": path, "exit_code": code})


def _emit(outcome, cfg, summary_path=None):
    """Write artifacts; returns the text for stdout."""
    json_text = serialize.dumps(outcome.payload)
    path = cfg.output.get("path") if cfg else None
    if outcome.code != EXIT_OK and "error" in outcome.payload:
        return json_text
    if outcome.text is not None:
        # CSV artifact goes to the path; the solve summary goes to stdout or --summary
        is_solve = cfg.command == "solve"
        if summary_path:
            serialize.write_atomic(summary_path, json_text)
        if path:
            serialize.write_atomic(path, outcome.text)
            return json_text if is_solve and not summary_path else _status(path, outcome.code)
        if is_solve and not summary_path:
            sys.stderr.write(json_text)
        return outcome.text
    if path:
        serialize.write_atomic(path, json_text)
        return _status(path, outcome.code)
    return json_text


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    cfg = None
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        outcome = run(cfg)
        text = _emit(outcome, cfg, getattr(ns, "summary", None))
    except ConfigError as exc:
        outcome = _error(EXIT_CONFIG, "ConfigError", str(exc))
        text = serialize.dumps(outcome.payload)
    except OSError as exc:
        outcome = _error(EXIT_CONFIG, "OSError", str(exc))
        text = serialize.dumps(outcome.payload)
    sys.stdout.write(text)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
