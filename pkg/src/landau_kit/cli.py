"""``landau-kit`` command line front end.

Every command takes its parameters from flags, from a JSON ``--config`` file,
or both (flags win). Parameters are checked against a per-command schema
before anything is computed; a violation exits with status 1 and writes
nothing. Computation and I/O failures exit with status 2. Artifacts are
written atomically, JSON with sorted keys and CSV with ``repr`` floats, so a
fixed configuration always yields byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import cone_core, dirichlet_engine, sequences, volume
from .errors import LandauKitError

COMMANDS = ("cone-info", "volume", "validate", "generate", "probe", "sweep")
SWEEP_KINDS = ("volume", "key-ratio", "probe")
FAMILIES = ("zeta", "eta", "harmonic", "counterexample-I", "counterexample-II", "random")
THREADS_ENV = "LANDAU_KIT_THREADS"


class SchemaError(Exception):
    """Configuration does not match the command schema (exit status 1)."""


class ComputationError(Exception):
    """Computation or I/O failure (exit status 2)."""


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)


# -- value parsers ---------------------------------------------------------------------

def _exact_number(value) -> Fraction:
    """Decimal or 'p/q' text (or a JSON number) as an exact rational."""
    if isinstance(value, bool):
        raise ValueError("booleans are not numbers")
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite number")
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def _rational(value):
    """Exact rational, collapsed to int when integral."""
    q = _exact_number(value)
    return int(q) if q.denominator == 1 else q


def _positive_int(value) -> int:
    q = _exact_number(value)
    if q.denominator != 1 or q < 1:
        raise ValueError(f"expected a positive integer, got {value!r}")
    return int(q)


def _nonneg_int(value) -> int:
    q = _exact_number(value)
    if q.denominator != 1 or q < 0:
        raise ValueError(f"expected a nonnegative integer, got {value!r}")
    return int(q)


def _real(value) -> float:
    return float(_exact_number(value))


def _real_list(value) -> list:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    out = [_real(v) for v in items if str(v).strip() != ""]
    if not out:
        raise ValueError("empty list")
    return out


def _text(value) -> str:
    if not isinstance(value, str) or not value:
        raise ValueError(f"expected text, got {value!r}")
    return value


def _choice(options):
    def parse(value):
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {value!r}")
        return value
    return parse


def _grid_axis(text) -> tuple:
    """'name=v1,v2,...' or 'name=a:b' (inclusive integer range)."""
    if isinstance(text, (list, tuple)) and len(text) == 2:
        name, values = text
        vals = list(values)
    else:
        name, sep, spec = str(text).partition("=")
        if not sep:
            raise ValueError(f"grid axis must look like name=values, got {text!r}")
        spec = spec.strip()
        if ":" in spec:
            lo, hi = spec.split(":", 1)
            vals = list(range(_nonneg_int(lo), _nonneg_int(hi) + 1))
        else:
            vals = [v for v in spec.split(",") if v.strip()]
    name = name.strip().replace("-", "_")
    if not vals:
        raise ValueError(f"grid axis {name!r} is empty")
    return name, vals


def _grid(value) -> list:
    if isinstance(value, dict):
        axes = [_grid_axis((k, v)) for k, v in value.items()]
    elif isinstance(value, (list, tuple)):
        axes = [_grid_axis(v) for v in value]
    else:
        axes = [_grid_axis(value)]
    if not 1 <= len(axes) <= 2:
        raise ValueError("sweep takes one or two grid axes")
    if len({a[0] for a in axes}) != len(axes):
        raise ValueError("grid axes must be distinct")
    return axes


PARSERS: dict = {
    "M": _positive_int,
    "rho": _rational,
    "rho_prime": _rational,
    "gamma": _rational,
    "c": _rational,
    "lambda": _rational,
    "samples": _positive_int,
    "seed": _nonneg_int,
    "out": _text,
    "seq": _text,
    "family": _choice(FAMILIES),
    "L_max": _positive_int,
    "l_min": _nonneg_int,
    "epsilon": _real_list,
    "k": _nonneg_int,
    "k_max": _positive_int,
    "N": _positive_int,
    "length": _positive_int,
    "format": _choice(("json", "csv")),
    "threads": _positive_int,
    "kind": _choice(SWEEP_KINDS),
    "grid": _grid,
    "tail_mode": _choice(dirichlet_engine.TAIL_MODES),
}

GRID_PARSERS = {"M": _positive_int, "rho": _rational, "epsilon": _real, "k": _nonneg_int}

COMMON = {"out", "format", "threads"}
SCHEMA = {
    "cone-info": ({"M", "rho"}, set()),
    "volume": ({"M", "rho"}, {"samples", "seed"}),
    "validate": ({"seq", "M", "rho"}, {"gamma", "L_max", "l_min", "rho_prime"}),
    "generate": ({"family"}, {"M", "rho", "rho_prime", "c", "lambda", "seed", "length"}),
    "probe": ({"seq", "epsilon"}, {"k_max", "N", "tail_mode"}),
    "sweep": ({"kind", "grid"}, {"M", "rho", "samples", "seed", "seq", "epsilon", "k", "N",
                                 "k_max", "tail_mode"}),
}
FAMILY_REQUIRED = {
    "counterexample-I": {"M", "rho"},
    "counterexample-II": {"M", "rho", "rho_prime"},
    "random": {"length", "seed"},
}
SWEEP_AXES = {
    "volume": ({"M", "rho"}, {"M", "rho"}),
    "key-ratio": ({"epsilon", "k"}, {"seq", "epsilon", "k"}),
    "probe": ({"epsilon"}, {"seq"}),
}
DEFAULTS = {
    "samples": 1_000_000, "seed": 0, "gamma": 0, "L_max": 100, "l_min": 1, "k_max": 40,
    "N": 1_000_000, "format": "json", "tail_mode": "sharp",
}


def validate_config(config: ExperimentConfig) -> dict:
    """Typed parameters for ``config`` or ``SchemaError``."""
    if config.command not in SCHEMA:
        raise SchemaError(f"unknown command {config.command!r}")
    required, optional = SCHEMA[config.command]
    allowed = required | optional | COMMON
    raw = {k.replace("-", "_"): v for k, v in config.params.items() if v is not None}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise SchemaError(f"{config.command}: unknown keys {', '.join(unknown)}")
    missing = sorted(required - set(raw))
    if missing:
        raise SchemaError(f"{config.command}: missing required keys {', '.join(missing)}")
    params = {}
    for key, value in raw.items():
        try:
            params[key] = PARSERS[key](value)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise SchemaError(f"{config.command}: bad value for {key}: {exc}") from None
    if config.command == "generate":
        missing = sorted(FAMILY_REQUIRED.get(params["family"], set()) - set(params))
        if missing:
            raise SchemaError(f"generate {params['family']}: missing keys {', '.join(missing)}")
    if config.command == "sweep":
        axes_ok, needed = SWEEP_AXES[params["kind"]]
        names = [name for name, _ in params["grid"]]
        bad = sorted(set(names) - axes_ok)
        if bad:
            raise SchemaError(f"sweep {params['kind']}: cannot sweep {', '.join(bad)}")
        missing = sorted(needed - set(names) - set(params))
        if missing:
            raise SchemaError(f"sweep {params['kind']}: missing keys {', '.join(missing)}")
        try:
            params["grid"] = [(name, [GRID_PARSERS[name](v) for v in vals])
                              for name, vals in params["grid"]]
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise SchemaError(f"sweep: bad grid value: {exc}") from None
        if (params["kind"] == "key-ratio" and "epsilon" not in names
                and len(params["epsilon"]) != 1):
            raise SchemaError("sweep key-ratio: a fixed epsilon must be a single value")
        if params["kind"] == "volume" and "M" not in names and "M" not in params:
            raise SchemaError("sweep volume: missing key M")
        if params["kind"] == "volume" and "rho" not in names and "rho" not in params:
            raise SchemaError("sweep volume: missing key rho")
    if params.get("format") == "csv" and config.command in ("cone-info", "validate", "generate"):
        raise SchemaError(f"{config.command} writes JSON only")
    for key, value in DEFAULTS.items():
        if key in required | optional | COMMON:
            params.setdefault(key, value)
    return params


def thread_count(params: dict) -> int:
    if "threads" in params:
        return params["threads"]
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return _positive_int(env)
        except ValueError:
            raise SchemaError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
    return os.cpu_count() or 1


# -- serialization ---------------------------------------------------------------------

def _clean(obj):
    """JSON-ready copy: Fractions and numpy scalars become floats, inf/nan become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (float, Fraction, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, Fraction, np.floating)):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(v)


def dumps_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".landau-kit-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- sequence loading ------------------------------------------------------------------

def load_sequence(ref: str) -> sequences.CoefficientSequence:
    catalog = sequences.builtin_sequences()
    if ref in catalog:
        return catalog[ref].sequence
    try:
        with open(ref, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ComputationError(f"cannot read sequence {ref!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"sequence file {ref!r} is not valid JSON: {exc}") from None
    if isinstance(data, dict) and "sequence" in data:
        data = data["sequence"]
    if not isinstance(data, dict):
        raise SchemaError(f"sequence file {ref!r} must hold a JSON object")
    try:
        return sequences.sequence_from_json(_exact_params(data))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"sequence file {ref!r}: {exc}") from None


def _exact_params(data: dict) -> dict:
    """Read family parameters as exact rationals so boundary checks stay exact."""
    params = data.get("params")
    if not isinstance(params, dict):
        return data
    exact = {}
    for key, value in params.items():
        if key in ("M", "rho", "rho_prime", "c", "lambda", "gamma") and value is not None:
            exact[key] = _rational(value)
        elif key == "cos" and isinstance(value, list):
            exact[key] = [_rational(v) for v in value]
        else:
            exact[key] = value
    return {**data, "params": exact}


# -- commands --------------------------------------------------------------------------

@dataclass
class Artifact:
    text: str
    summary: str


def cmd_cone_info(p: dict) -> Artifact:
    cone = cone_core.make_cone(p["M"], p["rho"])
    doc = {
        "command": "cone-info",
        "M": cone.dim,
        "rho": cone.rho,
        "generators": cone_core.generators(cone),
        "halfspaces": list(cone_core.polar_halfspaces(cone).rows),
        "lower_bound": volume.lower_bound(cone.dim, cone.rho),
    }
    if cone.dim <= volume.REPORT_PACKING_DIM:
        rects = volume.packing_rectangles(cone.dim, cone.rho)
        doc["packing_volume"] = volume.packing_volume(rects)
        doc["rectangles"] = [list(r.intervals) for r in rects]
    summary = f"cone-info: M={cone.dim} rho={float(cone.rho):g} lower_bound={doc['lower_bound']:.6g}"
    return Artifact(dumps_json(doc), summary)


def cmd_volume(p: dict, threads: int) -> Artifact:
    rep = volume.mc_volume(p["M"], float(p["rho"]), p["samples"], p["seed"], workers=threads)
    doc = {"command": "volume", **rep.to_dict()}
    if p["format"] == "csv":
        d = rep.to_dict()
        header = list(d)
        text = dumps_csv(header, [[d[h] for h in header]])
    else:
        text = dumps_json(doc)
    summary = (f"volume: M={rep.M} rho={rep.rho:g} packing={rep.exact_packing_volume} "
               f"lower_bound={rep.lower_bound:.6g} mc={rep.mc_estimate:.6g}+-{rep.mc_stderr:.2g}")
    return Artifact(text, summary)


def cmd_validate(p: dict) -> Artifact:
    seq = load_sequence(p["seq"])
    rep = sequences.validate_theorem_T(seq, p["M"], p["rho"], p["gamma"], p["L_max"],
                                       l_min=p["l_min"], rho_cos=p.get("rho_prime"))
    doc = {"command": "validate", "sequence": seq.description,
           "min_gamma_max": rep.min_gamma_max, **rep.to_dict()}
    summary = (f"validate: condition3_ok={rep.condition3_ok} condition4_ok={rep.condition4_ok} "
               f"min_gamma_max={float(rep.min_gamma_max):.6g} blocks={rep.blocks_checked}")
    return Artifact(dumps_json(doc), summary)


def cmd_generate(p: dict) -> Artifact:
    family = p["family"]
    derived = None
    if family == "counterexample-I":
        seq, params = sequences.gen_counterexample_I(p["M"], p["rho"], p.get("c", 1),
                                                     p.get("lambda", 1))
        derived = params.to_dict()
    elif family == "counterexample-II":
        seq, params = sequences.gen_counterexample_II(p["M"], p["rho"], p["rho_prime"],
                                                      p.get("lambda"))
        derived = params.to_dict()
    elif family == "random":
        seq = sequences.random_sequence(p["length"], p["seed"])
    else:
        seq = sequences.builtin_sequences()[family].sequence
    doc = {"sequence": seq.to_json(), "description": seq.description}
    if derived is not None:
        doc["derived"] = {**derived, "cosines": [float(x) for x in params.cosines]}
    summary = f"generate: {seq.description}"
    if derived is not None:
        summary += f" delta={[float(d) for d in params.delta]} gamma={float(params.gamma):.6g}"
    return Artifact(dumps_json(doc), summary)


def cmd_probe(p: dict) -> Artifact:
    seq = load_sequence(p["seq"])
    reports = [dirichlet_engine.landau_probe(seq, eps, p["k_max"], p["N"],
                                             tail_mode=p["tail_mode"]) for eps in p["epsilon"]]
    if p["format"] == "csv":
        rows = [(r.sequence, r.epsilon, k, c.real, c.imag)
                for r in reports for k, c in enumerate(r.coefficients)]
        text = dumps_csv(("sequence", "epsilon", "k", "c_k_re", "c_k_im"), rows)
    else:
        doc = {"command": "probe", "reports": [r.to_json() for r in reports]}
        text = dumps_json(doc)
    summary = "probe: " + "; ".join(
        f"eps={r.epsilon:g} radius={r.radius_estimate:.4g} slope={r.tail_slope:.3g} {r.verdict}"
        for r in reports)
    return Artifact(text, summary)


def row_seed(master: int, index: int) -> int:
    """Independent per-row seed derived from the master seed and the grid index."""
    ss = np.random.SeedSequence([master, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _sweep_points(grid) -> list:
    names = [name for name, _ in grid]
    return [dict(zip(names, combo)) for combo in itertools.product(*(vals for _, vals in grid))]


def cmd_sweep(p: dict, threads: int) -> Artifact:
    kind = p["kind"]
    points = _sweep_points(p["grid"])
    if kind == "volume":
        header = ("index", "M", "rho", "seed", "lower_bound", "packing_volume", "mc_estimate",
                  "mc_stderr", "samples")

        def run_row(i, pt):
            M = pt.get("M", p.get("M"))
            rho = pt.get("rho", p.get("rho"))
            seed = row_seed(p["seed"], i)
            rep = volume.mc_volume(M, float(rho), p["samples"], seed)
            return (i, M, float(rho), seed, rep.lower_bound, rep.exact_packing_volume,
                    rep.mc_estimate, rep.mc_stderr, rep.samples)
    elif kind == "key-ratio":
        seq = load_sequence(p["seq"])
        header = ("index", "sequence", "epsilon", "k", "N", "ratio")
        ratio = sequences.KeyRatioEvaluator(seq, p["N"])

        def run_row(i, pt):
            eps = pt["epsilon"] if "epsilon" in pt else p["epsilon"][0]
            k = pt["k"] if "k" in pt else p["k"]
            return (i, seq.description, eps, k, p["N"], ratio(eps, k))
    else:
        seq = load_sequence(p["seq"])
        header = ("index", "sequence", "epsilon", "N", "k_max", "radius_estimate", "tail_slope",
                  "verdict")

        def run_row(i, pt):
            r = dirichlet_engine.landau_probe(seq, pt["epsilon"], p["k_max"], p["N"],
                                              tail_mode=p["tail_mode"])
            return (i, r.sequence, r.epsilon, r.N, r.k_max, r.radius_estimate, r.tail_slope,
                    r.verdict)

    rows = _run_rows(run_row, points, threads)
    if p["format"] == "json":
        text = dumps_json({"command": "sweep", "kind": kind, "columns": list(header),
                           "rows": [list(r) for r in rows]})
    else:
        text = dumps_csv(header, rows)
    return Artifact(text, f"sweep {kind}: {len(rows)} rows")


def _run_rows(fn: Callable, points: list, threads: int) -> list:
    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(fn, i, pt) for i, pt in enumerate(points)]
            return [f.result() for f in futures]
    return [fn(i, pt) for i, pt in enumerate(points)]


def run(config: ExperimentConfig) -> int:
    """Execute ``config``; returns the process exit status."""
    try:
        params = validate_config(config)
        threads = thread_count(params)
        cmd = config.command
        if cmd == "cone-info":
            art = cmd_cone_info(params)
        elif cmd == "volume":
            art = cmd_volume(params, threads)
        elif cmd == "validate":
            art = cmd_validate(params)
        elif cmd == "generate":
            art = cmd_generate(params)
        elif cmd == "probe":
            art = cmd_probe(params)
        else:
            art = cmd_sweep(params, threads)
    except SchemaError as exc:
        print(f"landau-kit: {exc}", file=sys.stderr)
        return 1
    except (ComputationError, LandauKitError, ArithmeticError) as exc:
        print(f"landau-kit: {config.command} failed: {exc}", file=sys.stderr)
        return 2
    out = params.get("out")
    if out is None:
        sys.stdout.write(art.text)
        print(art.summary, file=sys.stderr)
        return 0
    try:
        write_atomic(out, art.text)
    except OSError as exc:
        print(f"landau-kit: cannot write {out!r}: {exc}", file=sys.stderr)
        return 2
    print(f"{art.summary} -> {out}")
    return 0


# -- argument parsing ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


FLAGS = {
    "--M": "block length M", "--rho": "cone ratio rho", "--rho-prime": "second ratio rho'",
    "--gamma": "diagonal shift gamma", "--c": "counterexample-I scale c",
    "--lambda": "counterexample scale lambda", "--samples": "Monte Carlo samples",
    "--seed": "master seed", "--out": "output path (stdout when omitted)",
    "--seq": "builtin sequence name or JSON file", "--family": "sequence family",
    "--L-max": "last block index", "--l-min": "first block index",
    "--epsilon": "comma-separated epsilon values", "--k": "power of log n",
    "--k-max": "highest Taylor order", "--N": "truncation", "--length": "random sequence length",
    "--format": "json or csv", "--threads": f"worker threads (else ${THREADS_ENV}, else CPU count)",
    "--kind": "sweep kind", "--tail-mode": "sharp or smooth Cauchy tails",
}
COMMAND_FLAGS = {
    cmd: sorted({"out", "format", "threads"} | req | opt) for cmd, (req, opt) in SCHEMA.items()
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="landau-kit",
                     description="Cones B^rho, admissible-cosine volumes and Dirichlet-series probes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", help="JSON file of parameters; explicit flags take precedence")
        for key in COMMAND_FLAGS[cmd]:
            if key == "grid":
                continue
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, help=FLAGS.get(flag))
        if cmd == "sweep":
            sp.add_argument("--grid", action="append", default=None,
                            help="axis as name=v1,v2,... or name=a:b; repeat for a second axis")
    return parser


def config_from_args(argv=None) -> ExperimentConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    params: dict = {}
    if config_path is not None:
        try:
            with open(config_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ComputationError(f"cannot read config {config_path!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise SchemaError(f"config {config_path!r} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise SchemaError("config file must hold a JSON object")
        loaded.pop("command", None)
        params.update({k.replace("-", "_"): v for k, v in loaded.items()})
    params.update({k: v for k, v in args.items() if v is not None})
    return ExperimentConfig(command, params)


def main(argv: Optional[list] = None) -> int:
    try:
        config = config_from_args(argv)
    except SystemExit as exc:  # argparse: --help (0) or a usage error (1)
        return exc.code if isinstance(exc.code, int) else 1
    except SchemaError as exc:
        print(f"landau-kit: {exc}", file=sys.stderr)
        return 1
    except ComputationError as exc:
        print(f"landau-kit: {exc}", file=sys.stderr)
        return 2
    return run(config)


def entry_point() -> None:
    sys.exit(main())

