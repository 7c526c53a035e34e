"""Command-line interface.

Subcommands::

    verify  --d N --samples K --seed S --env {1|d|d2|mixed} --out PATH
    lemmas  --trials K --seed S
    norms   --channel SPEC --d N [--map {T|id-minus-T|theta-id-minus-T}]
    gap     --channel SPEC --d N --restarts R
    search  --d N --budget B --seed S

Every subcommand also takes ``--config FILE`` (TOML with a flat ``[run]``
table using the flag names), ``--out``, ``--threads`` and repeated
``--tol NAME=VALUE``. Flags override the config file, which overrides the
defaults. Exit status: 0 when every check passes, 1 when a check fails,
2 when an SDP solve fails to certify its gap, 64 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .channels import (
    Channel,
    channel_to_superop,
    compose_theta,
    id_minus,
    parse_channel_spec,
)
from .diamond import MAX_GAP, SDPFailure, diamond_norm_sdp
from .linalg import DimensionError, DomainError
from . import verify as V

DEFAULT_SEED = 0xD1A30D
EXIT_OK, EXIT_FAIL, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64
SUBCOMMANDS = ("verify", "lemmas", "norms", "gap", "search")
TOLERANCE_NAMES = ("theorem", "lemma", "sdp_gap")
MAPS = ("T", "id-minus-T", "theta-id-minus-T")
ENVS = ("1", "d", "d2", "mixed")

DEFAULTS = {
    "d": 2,
    "seed": DEFAULT_SEED,
    "samples": 100,
    "trials": 1000,
    "budget": 200,
    "channel": None,
    "map": None,
    "env": None,
    "restarts": None,
    "out": None,
    "threads": None,
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    d: int = 2
    seed: int = DEFAULT_SEED
    samples: int = 100
    trials: int = 1000
    budget: int = 200
    channel_spec: str | None = None
    map: str | None = None
    env: str | None = None
    restarts: int | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    output_path: str | None = None
    threads: int = 1

    def tol(self, name: str, default: float) -> float:
        return self.tolerances.get(name, default)

    def to_json(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _tol_pair(text: str) -> tuple[str, float]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    name, value = text.split("=", 1)
    name = name.strip()
    if name not in TOLERANCE_NAMES:
        raise argparse.ArgumentTypeError(f"unknown tolerance {name!r} (known: {', '.join(TOLERANCE_NAMES)})")
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} needs a number, got {value!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} must be positive")
    return name, v


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="TOML file with a [run] table")
    common.add_argument("--seed", type=_seed, default=S)
    common.add_argument("--out", default=S, help="path for JSON-lines records")
    common.add_argument("--threads", type=_positive_int, default=S)
    common.add_argument("--tol", type=_tol_pair, action="append", default=S, metavar="NAME=VALUE")

    parser = _Parser(prog="diamond-gap", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", parents=[common], help="theorem sweep over Haar-random channels")
    p.add_argument("--d", type=_positive_int, default=S)
    p.add_argument("--samples", type=_positive_int, default=S)
    p.add_argument("--env", choices=ENVS, default=S)
    p.add_argument("--restarts", type=int, default=S, help="ascent restarts for the cross-check (0 disables)")

    p = sub.add_parser("lemmas", parents=[common], help="randomized lemma and identity checks")
    p.add_argument("--trials", type=_positive_int, default=S)

    p = sub.add_parser("norms", parents=[common], help="diamond norms for one channel")
    p.add_argument("--channel", default=S)
    p.add_argument("--d", type=_positive_int, default=S)
    p.add_argument("--map", choices=MAPS, default=S)

    p = sub.add_parser("gap", parents=[common], help="equality-gap witness for one channel")
    p.add_argument("--channel", default=S)
    p.add_argument("--d", type=_positive_int, default=S)
    p.add_argument("--restarts", type=_positive_int, default=S)

    p = sub.add_parser("search", parents=[common], help="search for the largest ratio")
    p.add_argument("--d", type=_positive_int, default=S)
    p.add_argument("--budget", type=_positive_int, default=S)
    p.add_argument("--env", choices=ENVS, default=S)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path!r}: {exc}") from None
    run = data.get("run", {})
    if not isinstance(run, dict):
        raise ConfigError("[run] must be a table")
    allowed = set(DEFAULTS) | {"tol"}
    unknown = set(run) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [run]: {', '.join(sorted(unknown))}")
    return run


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Resolve flags, config file and defaults into a :class:`RunConfig`."""
    args = vars(build_parser().parse_args(argv))
    sub = args.pop("subcommand")
    merged = dict(DEFAULTS)
    tolerances: dict[str, float] = {}
    if "config" in args:
        file_values = _load_config_file(args.pop("config"))
        file_tol = file_values.pop("tol", {})
        if not isinstance(file_tol, dict):
            raise ConfigError("tol must be a table of NAME = VALUE")
        for k, v in file_tol.items():
            try:
                name, value = _tol_pair(f"{k}={v}")
            except argparse.ArgumentTypeError as exc:
                raise ConfigError(str(exc)) from None
            tolerances[name] = value
        merged.update(file_values)
    for name, value in args.pop("tol", []):
        tolerances[name] = value
    merged.update(args)

    threads = merged["threads"]
    env_threads = os.environ.get("DIAMOND_GAP_THREADS")
    if "threads" not in args and env_threads:
        try:
            threads = _positive_int(env_threads)
        except argparse.ArgumentTypeError:
            raise ConfigError(f"DIAMOND_GAP_THREADS must be a positive integer, got {env_threads!r}") from None
    if threads is None:
        threads = os.cpu_count() or 1

    try:
        cfg = RunConfig(
            subcommand=sub,
            d=int(merged["d"]),
            seed=_seed(str(merged["seed"])),
            samples=int(merged["samples"]),
            trials=int(merged["trials"]),
            budget=int(merged["budget"]),
            channel_spec=merged["channel"],
            map=merged["map"],
            env=None if merged["env"] is None else str(merged["env"]),
            restarts=None if merged["restarts"] is None else int(merged["restarts"]),
            tolerances=tolerances,
            output_path=merged["out"],
            threads=int(threads),
        )
    except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
        raise ConfigError(f"malformed configuration value: {exc}") from None
    if not 2 <= cfg.d <= 8:
        raise ConfigError(f"d must lie in [2, 8], got {cfg.d}")
    if cfg.env is not None and cfg.env not in ENVS:
        raise ConfigError(f"env must be one of {', '.join(ENVS)}")
    if cfg.map is not None and cfg.map not in MAPS:
        raise ConfigError(f"map must be one of {', '.join(MAPS)}")
    if min(cfg.samples, cfg.trials, cfg.budget, cfg.threads) < 1:
        raise ConfigError("samples, trials, budget and threads must be positive")
    if sub in ("norms", "gap") and not cfg.channel_spec:
        raise ConfigError(f"{sub} needs --channel")
    return cfg


class RecordWriter:
    """JSON-lines writer: one metadata header line, then one record per line."""

    def __init__(self, path: str | None, config: RunConfig):
        self.path = path
        self._fh = None
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(path, "w", encoding="utf-8")
            meta = {
                "meta": {
                    "version": __version__,
                    "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                    "config": config.to_json(),
                }
            }
            self._fh.write(json.dumps(meta) + "\n")

    def write(self, record: dict) -> None:
        if self._fh is not None:
            self._fh.write(json.dumps(record) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _out_path(cfg: RunConfig) -> str:
    return cfg.output_path or f"{cfg.subcommand}_records.jsonl"


def _headline(L: float, R: float, d: int) -> str:
    bound = d / math.sqrt(2) * R
    ratio = 0.0 if R <= 1e-12 else L / (d * R)
    return f"L = {L:.6f}  R = {R:.6f}  bound (d/sqrt2)R = {bound:.6f}  ratio = {ratio:.6f} (1/sqrt2 = {V.ALPHA:.6f})"


def _run_verify(cfg: RunConfig, out) -> int:
    env = cfg.env or "mixed"
    restarts = 0 if cfg.restarts is None else cfg.restarts
    tol = cfg.tol("theorem", V.THEOREM_TOL)
    reports = V.theorem_sweep(
        cfg.d, cfg.samples, cfg.seed, env=env, workers=cfg.threads, ascent_restarts=restarts,
        max_gap=cfg.tol("sdp_gap", MAX_GAP), tol=tol,
    )
    failures = 0
    for r in reports:
        out.write(r.to_record())
        if not (r.passed and r.ratio <= V.ALPHA + tol):
            failures += 1
    csv_path = Path(_out_path(cfg)).with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(V.CSV_COLUMNS)
        for r in reports:
            w.writerow(r.csv_row())
    worst = max(reports, key=lambda r: r.ratio)
    print(f"verify: d={cfg.d} samples={cfg.samples} env={env} seed={cfg.seed}")
    print(f"  largest ratio at seed {worst.seed}: {_headline(worst.L, worst.R, cfg.d)}")
    print(f"  max ratio over sweep = {worst.ratio:.6f}; {len(reports) - failures}/{len(reports)} pass")
    print(f"  records: {_out_path(cfg)}  summary: {csv_path}")
    return EXIT_OK if failures == 0 else EXIT_FAIL


def _run_lemmas(cfg: RunConfig, out) -> int:
    result = V.lemma_suite(cfg.seed, cfg.trials, tol=cfg.tol("lemma", V.LEMMA_TOL))
    print(f"lemmas: trials={cfg.trials} seed={cfg.seed}")
    for t in result.tallies:
        out.write(t.to_record())
        status = "PASS" if t.passed else "FAIL"
        slack = "" if t.min_slack is None else f"  min slack {t.min_slack:.3e}"
        print(f"  [{status}] {t.name:26s} max violation {t.max_violation:.3e}{slack}")
    n_pass = sum(t.passed for t in result.tallies)
    print(f"  {n_pass}/{len(result.tallies)} statements pass")
    return EXIT_OK if result.passed else EXIT_FAIL


def _channel(cfg: RunConfig) -> Channel:
    return parse_channel_spec(cfg.channel_spec, cfg.d, seed=cfg.seed)


def _run_norms(cfg: RunConfig, out) -> int:
    T = _channel(cfg)
    max_gap = cfg.tol("sdp_gap", MAX_GAP)
    phi = id_minus(T)
    maps = {"T": channel_to_superop(T), "id-minus-T": phi, "theta-id-minus-T": compose_theta(phi)}
    selected = [cfg.map] if cfg.map else ["id-minus-T", "theta-id-minus-T"]
    results = {name: diamond_norm_sdp(maps[name], max_gap=max_gap) for name in selected}
    record = {"channel": T.description or cfg.channel_spec, "d": cfg.d}
    for name, res in results.items():
        record[name] = res.to_json()
    print(f"norms: channel={cfg.channel_spec} d={cfg.d}")
    for name, res in results.items():
        print(f"  ||{name}||_diamond = {res.value:.6f}  (certified [{res.lower_certificate:.9f}, {res.upper_certificate:.9f}])")
    code = EXIT_OK
    if cfg.map is None:
        L, R = results["theta-id-minus-T"].value, results["id-minus-T"].value
        ok = L <= cfg.d / math.sqrt(2) * R + cfg.tol("theorem", V.THEOREM_TOL)
        record["pass"] = ok
        print(f"  {_headline(L, R, cfg.d)}  {'PASS' if ok else 'FAIL'}")
        code = EXIT_OK if ok else EXIT_FAIL
    out.write(record)
    return code


def _run_gap(cfg: RunConfig, out) -> int:
    T = _channel(cfg)
    restarts = 50 if cfg.restarts is None else cfg.restarts
    try:
        w = V.gap_demonstration(T, restarts=restarts, seed=cfg.seed)
    except DomainError as exc:
        print(f"gap: {exc}", file=sys.stderr)
        return EXIT_FAIL
    record = w.to_record()
    record["channel"] = T.description or cfg.channel_spec
    out.write(record)
    print(f"gap: channel={cfg.channel_spec} d={cfg.d} restarts={restarts} ({w.label})")
    print(f"  R at witness = {w.R_value:.6f}; rank X* = {w.rank_X}, rank Y* = {w.rank_Y} (d^2 = {cfg.d ** 2})")
    print(f"  slack in ||Y*||_1 <= d ||X*||_2: {w.slack_lemma2:.6e}")
    print(f"  slack in d ||X*||_2 <= (d/sqrt2) ||X*||_1: {w.slack_lemma1:.6e}")
    print(f"  tr X* = {w.trace_X:.2e}; ||tr_H X*||_2 = {w.partial_trace_H_error:.2e}; classification: {w.classification}")
    ok = w.strict and not w.analysis.both_tight
    return EXIT_OK if ok else EXIT_FAIL


def _run_search(cfg: RunConfig, out) -> int:
    env = cfg.env or "d2"
    result = V.search_max_ratio(cfg.d, cfg.budget, cfg.seed, env=env)
    for step in result.trace:
        out.write(step.to_record())
    out.write(result.to_record())
    rep = result.best_report
    print(f"search: d={cfg.d} budget={cfg.budget} env={env} seed={cfg.seed}")
    print(f"  best ratio = {result.best_ratio:.6f} (1/sqrt2 = {V.ALPHA:.6f})")
    print(f"  best channel: {_headline(rep.L, rep.R, cfg.d)}")
    ok = result.best_ratio <= V.ALPHA + cfg.tol("theorem", V.THEOREM_TOL)
    return EXIT_OK if ok else EXIT_FAIL


_RUNNERS = {
    "verify": _run_verify,
    "lemmas": _run_lemmas,
    "norms": _run_norms,
    "gap": _run_gap,
    "search": _run_search,
}


def run(cfg: RunConfig) -> int:
    """Execute a configured run; returns the process exit code."""
    path = _out_path(cfg)
    try:
        with RecordWriter(path, cfg) as out:
            return _RUNNERS[cfg.subcommand](cfg, out)
    except SDPFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DomainError, DimensionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"diamond-gap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
