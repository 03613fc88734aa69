"""Command-line interface: ``polyatest <subcommand> [options]``.

Exit codes: 0 success, 2 malformed input or configuration, 3 degenerate
data. Errors are reported as one JSON object on stderr. Every option can
also be set through an environment variable ``POLYATEST_<OPTION>`` (for
example ``POLYATEST_SEED=7``); command-line flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .bftests import CondOptParams, GroupedSample, cond_two_sample_test, independence_test, two_sample_test
from .errors import DegenerateSample, DomainError, EmptyGroup, PolyaTestError
from .evaluation import (
    TEST_CASES,
    RoundScores,
    SensitivitySpec,
    SimConfig,
    auc_summaries,
    curves,
    generate_rounds,
    score_rounds,
    sensitivity_sweep,
)
from .lcd import Dataset, LcdScoreParams, TestConfig, graph_emit, lcd_scan, to_dot
from .partition import STANDARD_ALPHA_RULES, AlphaRule, DepthRule, PartitionSpec
from .simgen import MenuConfig, read_round, write_round

ENV_PREFIX = "POLYATEST_"
EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3


class InputError(PolyaTestError, ValueError):
    """Malformed files or arguments (exit code 2)."""


# ---------------------------------------------------------------- helpers

def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _float(text) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InputError(f"not a number: {text!r}") from None


def _int(text) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise InputError(f"not an integer: {text!r}") from None


def read_csv(path) -> tuple:
    """Read an RFC-4180 file with a header row into ``(header, columns)``."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except (UnicodeDecodeError, csv.Error) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from None
    if not rows or not rows[0]:
        raise InputError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names")
    body = [r for r in rows[1:] if r]
    data = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        for j, cell in enumerate(row):
            value = _float(cell.strip())
            if not math.isfinite(value):
                raise InputError(f"{path}: non-finite value in row {i + 2}")
            data[i, j] = value
    return header, {name: data[:, j] for j, name in enumerate(header)}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float) and math.isnan(value):
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- config

def _config(args) -> TestConfig:
    try:
        alpha = AlphaRule.parse(args.alpha_rule)
        spec = PartitionSpec(depth_rule=DepthRule.parse(args.depth_rule))
        condopt = CondOptParams(stop_probability=_float(args.rho), h1_depth=args.h1_depth)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    return TestConfig(alpha=alpha, spec=spec, condopt=condopt)


def _score_params(args) -> LcdScoreParams:
    try:
        return LcdScoreParams(alpha=_float(args.alpha), alpha0=_float(args.alpha0), mode=args.mode)
    except DomainError as exc:
        raise InputError(str(exc)) from None


def _menu(args) -> MenuConfig:
    links = tuple(args.links.split(",")) if args.links else None
    theta = _int(args.theta) if args.theta is not None else None
    try:
        return MenuConfig(scm=args.scm, g=args.g, links=links, theta=theta)
    except DomainError as exc:
        raise InputError(str(exc)) from None


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


# ---------------------------------------------------------------- commands

def _parse_roles(text: str, header) -> dict:
    roles = {}
    for i, item in enumerate(_split(text)):
        if "=" in item:
            role, col = (s.strip() for s in item.split("=", 1))
        else:
            if i >= len(header):
                raise InputError("more roles than columns")
            role, col = item, header[i]
        if role not in ("c", "x", "y", "z"):
            raise InputError(f"unknown role {role!r}")
        if col not in header:
            raise InputError(f"column {col!r} not found")
        roles[role] = col
    return roles


def cmd_test(args) -> int:
    header, cols = read_csv(args.input)
    roles = _parse_roles(args.roles, header)
    cfg = _config(args)
    keys = set(roles)
    try:
        if keys == {"c", "x", "z"}:
            result = cond_two_sample_test(cols[roles["c"]], cols[roles["x"]], cols[roles["z"]],
                                          cfg.condopt, cfg.alpha, cfg.spec)
        elif keys == {"c", "x"}:
            result = two_sample_test(GroupedSample(cols[roles["x"]], cols[roles["c"]]),
                                     cfg.alpha, cfg.spec, cfg.condopt.h1_depth)
        elif keys == {"x", "y"}:
            result = independence_test(np.column_stack([cols[roles["x"]], cols[roles["y"]]]),
                                       cfg.alpha, cfg.spec)
        else:
            raise InputError("roles must be c,x or x,y or c,x,z")
    except DomainError as exc:
        raise InputError(str(exc)) from None
    _emit(dumps(result.to_dict()), args.out)
    return EXIT_OK


def cmd_lcd(args) -> int:
    header, cols = read_csv(args.input)
    context = _split(args.context)
    system = _split(args.system) or [h for h in header if h not in context]
    for name in context + system:
        if name not in cols:
            raise InputError(f"column {name!r} not found")
    try:
        data = Dataset({k: cols[k] for k in context}, {k: cols[k] for k in system})
        results = lcd_scan(data, _score_params(args), _config(args), workers=args.workers)
    except DomainError as exc:
        raise InputError(str(exc)) from None
    graph = graph_emit(results, nodes=system)
    payload = {"triples": [r.to_dict() for r in results],
               "graph": {"nodes": list(graph.nodes), "edges": [list(e) for e in graph.edges]}}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "triples.json").write_text(dumps(payload), encoding="utf-8")
        (out / "graph.dot").write_text(to_dot(graph), encoding="utf-8")
    else:
        payload["dot"] = to_dot(graph)
        sys.stdout.write(dumps(payload))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if not args.out:
        raise InputError("simulate needs --out")
    n, rounds = _int(args.n), _int(args.rounds)
    if n < 2 or rounds < 1:
        raise InputError("need n >= 2 and rounds >= 1")
    sim = SimConfig(n=n, rounds=rounds, seed=_int(args.seed), menu=_menu(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stems = []
    for i, r in enumerate(generate_rounds(sim, args.workers)):
        stem = f"round_{i:05d}"
        write_round(r, out / stem)
        stems.append(stem)
    manifest = {"n": n, "rounds": rounds, "seed": sim.seed, "stems": stems}
    (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return EXIT_OK


def _load_rounds(directory):
    directory = Path(directory)
    try:
        manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
        return [read_round(directory / stem) for stem in manifest["stems"]]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise InputError(f"cannot read rounds from {directory}: {exc}") from None


def _write_scores(path, scores):
    fields = list(RoundScores.__dataclass_fields__)
    write_csv(path, fields, [[getattr(s, f) if f != "skipped" else (s.skipped or "")
                              for f in fields] for s in scores])


def cmd_eval(args) -> int:
    if not args.out:
        raise InputError("eval needs --out")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params, cfg = _score_params(args), _config(args)
    auc_rows, summaries = [], []
    for k, directory in enumerate(args.rounds_dir):
        rounds = _load_rounds(directory)
        if not rounds:
            raise InputError(f"{directory}: no rounds")
        n = rounds[0].n
        scores = score_rounds(rounds, cfg, args.workers)
        suffix = "" if len(args.rounds_dir) == 1 else f"_{k}"
        _write_scores(out / f"scores{suffix}.csv", scores)
        try:
            curve_map = curves(scores, params)
            summ = auc_summaries(scores, n, params, _int(args.batches))
        except DomainError as exc:
            raise InputError(str(exc)) from None
        for case in TEST_CASES:
            c = curve_map[case]
            write_csv(out / f"roc_{case}{suffix}.csv", ["alpha", "fpr", "tpr"],
                      [[a, f, t] for f, t, a in c.points])
        for s in summ:
            auc_rows.append([s.test_case, s.n, s.rounds, s.auc, s.median])
            summaries.append({"test_case": s.test_case, "n": s.n, "rounds": s.rounds,
                              "auc": s.auc, "median": s.median})
    write_csv(out / "auc.csv", ["test_case", "n", "rounds", "auc", "median"], auc_rows)
    (out / "auc.json").write_text(dumps({"mode": params.mode, "alpha0": params.alpha0,
                                         "summaries": summaries}), encoding="utf-8")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    rules = [AlphaRule.parse(r) for r in _split(args.rules)] if args.rules else list(STANDARD_ALPHA_RULES)
    sim = SimConfig(n=_int(args.n), rounds=_int(args.rounds), seed=_int(args.seed), menu=_menu(args))
    table = sensitivity_sweep(SensitivitySpec(tuple(rules)), sim, _config(args), _score_params(args),
                              args.workers, _int(args.batches))
    rows = [[str(rule), s.test_case, s.n, s.rounds, s.auc] for rule, s in table]
    header = ["rule", "test_case", "n", "rounds", "auc"]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "sensitivity.csv", header, rows)
    else:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\r\n").writerows([header] + [[_fmt(v) for v in r] for r in rows])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_merge_contexts(args) -> int:
    header0, tables = None, []
    for path in args.inputs:
        header, cols = read_csv(path)
        if header0 is None:
            header0 = header
        elif header != header0:
            raise InputError(f"{path}: header differs from {args.inputs[0]}")
        tables.append(cols)
    stems = [Path(p).stem for p in args.inputs]
    if len(set(stems)) != len(stems):
        stems = [str(i) for i in range(len(stems))]
    indicators = [f"{args.prefix}{s}" for s in stems]
    if set(indicators) & set(header0):
        raise InputError("indicator column names clash with measurement columns")
    merged = {h: np.concatenate([t[h] for t in tables]) for h in header0}
    if args.log:
        for h in header0:
            if np.any(merged[h] <= 0):
                raise DegenerateSample(f"column {h!r} has non-positive values; cannot take logs")
            merged[h] = np.log(merged[h])
    sizes = [t[header0[0]].size if header0 else 0 for t in tables]
    rows = []
    for k, size in enumerate(sizes):
        onehot = [int(j == k) for j in range(len(tables))]
        offset = sum(sizes[:k])
        for i in range(size):
            rows.append([merged[h][offset + i] for h in header0] + onehot)
    if args.out:
        write_csv(args.out, header0 + indicators, rows)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header0 + indicators)
        w.writerows([[_fmt(v) for v in r] for r in rows])
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _common(p, *groups):
    if "prior" in groups:
        p.add_argument("--alpha-rule", default=_env("alpha_rule", "poly:1"),
                       help='Dirichlet growth rule, e.g. "poly:1" or "exp:2"')
        p.add_argument("--depth-rule", default=_env("depth_rule", "log4"),
                       help='truncation depth rule: "log4", "log2" or "fixed:J"')
        p.add_argument("--rho", default=_env("rho", "0.5"), help="cond-OPT stopping probability")
        p.add_argument("--h1-depth", choices=("pooled", "group"), default=_env("h1_depth", "pooled"))
    if "score" in groups:
        p.add_argument("--mode", choices=("clamped", "same_threshold", "mirrored"),
                       default=_env("mode", "clamped"))
        p.add_argument("--alpha", default=_env("alpha", "0.05"))
        p.add_argument("--alpha0", default=_env("alpha0", "0.5"))
    if "sim" in groups:
        p.add_argument("--seed", default=_env("seed", "0"))
        p.add_argument("--rounds", default=_env("rounds", "2000"))
        p.add_argument("--n", default=_env("n", "400"))
        p.add_argument("--scm", default=_env("scm", None))
        p.add_argument("--g", default=_env("g", None))
        p.add_argument("--links", default=_env("links", None), help="comma-separated link kinds")
        p.add_argument("--theta", default=_env("theta", None))
    if "workers" in groups:
        p.add_argument("--workers", type=int, default=int(_env("workers", "1")))
    if "batches" in groups:
        p.add_argument("--batches", default=_env("batches", "1"),
                       help="report the median AUC over this many batches of rounds")
    p.add_argument("--out", default=_env("out", None))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyatest", description="Polya tree Bayesian independence tests and LCD.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run one test on a CSV file")
    p.add_argument("input")
    p.add_argument("--roles", default=_env("roles", "c,x"),
                   help='column roles, positional ("c,x") or named ("c=group,x=value"); '
                        "c,x two-sample; x,y independence; c,x,z conditional")
    _common(p, "prior")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("lcd", help="scan a multi-context CSV with LCD")
    p.add_argument("input")
    p.add_argument("--context", required=True, help="comma-separated binary context columns")
    p.add_argument("--system", default=None, help="comma-separated system columns (default: the rest)")
    _common(p, "prior", "score", "workers")
    p.set_defaults(func=cmd_lcd)

    p = sub.add_parser("simulate", help="write simulated rounds")
    _common(p, "sim", "workers")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="score simulated rounds and write ROC/AUC tables")
    p.add_argument("rounds_dir", nargs="+")
    _common(p, "prior", "score", "workers", "batches")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sensitivity", help="AUC per Dirichlet growth rule on shared rounds")
    p.add_argument("--rules", default=_env("rules", None),
                   help="comma-separated alpha rules (default: the eight standard rules)")
    _common(p, "prior", "score", "sim", "workers", "batches")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("merge-contexts", help="stack per-context CSV files with indicator columns")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--log", action="store_true", default=_env("log", "") not in ("", "0", "false"),
                   help="take natural logs of the measurements")
    p.add_argument("--prefix", default=_env("prefix", "C_"), help="indicator column prefix")
    _common(p)
    p.set_defaults(func=cmd_merge_contexts)
    return parser


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        return _fail(InputError("--workers must be at least 1"), EXIT_INPUT)
    try:
        return args.func(args)
    except (DegenerateSample, EmptyGroup) as exc:
        return _fail(exc, EXIT_DEGENERATE)
    except (InputError, DomainError, PolyaTestError) as exc:
        return _fail(exc, EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
