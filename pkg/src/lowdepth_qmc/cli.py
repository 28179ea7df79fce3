"""Command-line front end.

Commands: price, sweep, tradeoff, hardware-map, schedule. Exit status is 0 on
success, 1 on usage or configuration errors and 2 on domain errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import estimators as est
from . import resources as res
from .config import ConfigError, RunConfig, load_config
from .oracle import split_market_oracle
from .qae import NoiseModel
from .sweep import sweep

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2

TRADEOFF_EPSILONS = (1e-2, 1e-3, 1e-4, 1e-5)
TRADEOFF_BETAS = (1.0, 2 / 3, 1 / 3, 0.0)

PRICE_COLUMNS = [
    "method", "value", "value_ci_low", "value_ci_high", "a_hat", "ci_low", "ci_high",
    "value_scale", "total_oracle_calls", "max_serial_depth",
]
SWEEP_COLUMNS = ["method", "param", "total_calls", "max_serial_depth", "rmse", "mean_abs_err"]
TRADEOFF_COLUMNS = [
    "epsilon", "beta", "classical_samples", "serial_samples", "allowed_error", "speedup",
    "classical_samples_display", "serial_samples_display", "allowed_error_display",
    "speedup_display", "note",
]
HARDWARE_COLUMNS = [
    "gates_per_sample", "gate_error", "clock_ratio", "epsilon", "regime", "net_speedup",
    "max_serial_samples", "grover_depth",
]
SCHEDULE_COLUMNS = ["index", "depth", "shots", "calls_per_shot", "calls"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# ------------------------------------------------------------------ output


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: row.get(c) for c in columns} for row in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: _cell(row.get(c)) for c in columns})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    return cfg


def _noise(cfg: RunConfig) -> NoiseModel:
    return NoiseModel(cfg.get("estimator.noise", 0.0))


def price_report(cfg: RunConfig) -> est.EstimateReport:
    seed = cfg.require_seed()
    oracle = cfg.oracle()
    method = cfg.method
    noise = _noise(cfg)
    if method == "classical":
        return est.classical_mc(oracle, cfg.get("estimator.n_samples", 10_000), seed)
    if method == "canonical":
        return est.canonical_qae(oracle, cfg.get("estimator.m_bits", 8), cfg.get("estimator.shots", 1), seed)
    if method == "mle":
        schedule = est.build_exp_schedule(cfg.get("estimator.K", 8), cfg.shots_per_round)
        return est.mle_qae(oracle, schedule, noise, seed)
    if method == "kp":
        return est.kp_estimate(
            oracle, _need(cfg, "estimator.epsilon"), _need(cfg, "estimator.beta"), noise, seed,
            cfg.get("estimator.shots_per_round"),
        )
    if method == "parallel":
        buckets, weights = split_market_oracle(oracle, cfg.get("estimator.buckets", 16))
        return est.parallel_split_estimate(
            buckets, weights, _need(cfg, "estimator.epsilon"), seed, noise, cfg.shots_per_round
        )
    raise ConfigError(f"unknown method {method!r}")


def _need(cfg: RunConfig, key: str):
    if cfg.get(key) is None:
        raise ConfigError(f"missing key {key!r} for method {cfg.method!r}")
    return cfg.get(key)


def cmd_price(args) -> list[dict]:
    r = price_report(_config(args))
    lo, hi = r.value_ci
    return [{
        "method": r.method, "value": r.value, "value_ci_low": lo, "value_ci_high": hi,
        "a_hat": r.a_hat, "ci_low": r.ci_low, "ci_high": r.ci_high, "value_scale": r.value_scale,
        "total_oracle_calls": r.total_oracle_calls, "max_serial_depth": r.max_serial_depth,
    }]


def sweep_params(cfg: RunConfig, values=None, betas=None) -> list[tuple]:
    method = cfg.method
    values = values or cfg.get("sweep.values")
    if not values:
        raise ConfigError("sweep needs grid values (sweep.values or --values)")
    if method == "classical":
        return [(int(v),) for v in values]
    if method == "mle":
        return [(int(v),) for v in values]
    if method == "canonical":
        return [(int(v), cfg.get("estimator.shots", 1)) for v in values]
    if method == "kp":
        betas = betas or cfg.get("sweep.betas") or (cfg.get("estimator.beta"),)
        if None in betas:
            raise ConfigError("kp sweep needs sweep.betas or estimator.beta")
        return [(float(e), float(b)) for b in betas for e in values]
    raise ConfigError(f"method {method!r} cannot be swept")


def cmd_sweep(args) -> list[dict]:
    cfg = _config(args)
    seed = cfg.require_seed()
    params = sweep_params(cfg, args.values, args.betas)
    trials = args.trials or cfg.get("sweep.trials", 20)
    spr = cfg.get("estimator.shots_per_round")
    rows, _ = sweep(cfg.method, cfg.oracle(), params, trials, seed, _noise(cfg), spr, args.jobs)
    return [r.as_dict() for r in rows]


def tradeoff_rows(epsilons, betas, fidelity: float = res.DEFAULT_FIDELITY) -> list[dict]:
    rows = []
    for eps in epsilons:
        for beta in betas:
            row = res.TradeoffPoint(eps, beta, fidelity).row()
            for k in ("classical_samples", "serial_samples", "allowed_error", "speedup"):
                row[k + "_display"] = res.display_round(float(row[k]))
            row["note"] = _note(eps, beta)
            rows.append(row)
    return rows


def _note(eps: float, beta: float) -> str:
    for (e, b, column), text in res.KNOWN_DISCREPANCIES.items():
        if abs(e - eps) <= 1e-12 * e and abs(b - beta) <= 1e-12:
            return f"{column}: {text}"
    return ""


def cmd_tradeoff(args) -> list[dict]:
    return tradeoff_rows(args.epsilons or TRADEOFF_EPSILONS, args.betas or TRADEOFF_BETAS, args.fidelity)


def hardware_rows(gates: int, clock_ratios, gate_errors, epsilon: float, fidelity: float = res.DEFAULT_FIDELITY) -> list[dict]:
    rows = []
    for clock in clock_ratios:
        for g in gate_errors:
            regime = res.classify_hardware(res.HardwareProfile(gates, g, clock), epsilon, fidelity)
            rows.append({
                "gates_per_sample": gates, "gate_error": g, "clock_ratio": clock, "epsilon": epsilon,
                "regime": regime.tag.value, "net_speedup": regime.net_speedup,
                "max_serial_samples": regime.max_serial_samples, "grover_depth": regime.grover_depth,
            })
    return rows


def cmd_hardware_map(args) -> list[dict]:
    cfg = _config(args)
    gates = args.gates or cfg.get("hardware.gates_per_sample", 1000)
    clocks = args.clock_ratios or [cfg.get("hardware.clock_ratio", 1.0)]
    errors = args.gate_errors or ([cfg.get("hardware.gate_error")] if cfg.get("hardware.gate_error") is not None
                                  else [10.0**-k for k in range(2, 13)])
    return hardware_rows(int(gates), clocks, errors, args.epsilon, args.fidelity)


def schedule_rows(schedule: est.Schedule) -> list[dict]:
    rows = [
        {"index": i, "depth": e.depth, "shots": e.shots, "calls_per_shot": e.calls_per_shot, "calls": e.calls}
        for i, e in enumerate(schedule.entries)
    ]
    rows.append({
        "index": "total", "depth": schedule.max_depth, "shots": sum(e.shots for e in schedule.entries),
        "calls_per_shot": schedule.max_serial_calls, "calls": schedule.total_calls,
    })
    return rows


def cmd_schedule(args) -> list[dict]:
    spr = args.shots_per_round or est.kp_shots_per_round(args.epsilon, args.beta)
    return schedule_rows(est.build_kp_schedule(args.epsilon, args.beta, spr))


COMMANDS = {
    "price": (cmd_price, PRICE_COLUMNS),
    "sweep": (cmd_sweep, SWEEP_COLUMNS),
    "tradeoff": (cmd_tradeoff, TRADEOFF_COLUMNS),
    "hardware-map": (cmd_hardware_map, HARDWARE_COLUMNS),
    "schedule": (cmd_schedule, SCHEDULE_COLUMNS),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value run configuration")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    parser = _Parser(prog="lowdepth-qmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("price", parents=[common], help="run one estimator on the configured oracle")

    p = sub.add_parser("sweep", parents=[common], help="seeded RMSE sweep")
    p.add_argument("--values", type=_float_list, help="n_samples, K, m_bits or epsilon grid")
    p.add_argument("--betas", type=_float_list, help="beta grid for kp sweeps")
    p.add_argument("--trials", type=int)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("tradeoff", parents=[common], help="accuracy/depth/speedup table")
    p.add_argument("--epsilons", type=_float_list)
    p.add_argument("--betas", type=_float_list)
    p.add_argument("--fidelity", type=float, default=res.DEFAULT_FIDELITY)

    p = sub.add_parser("hardware-map", parents=[common], help="speedup regime per hardware point")
    p.add_argument("--gates", type=int)
    p.add_argument("--clock-ratios", type=_float_list)
    p.add_argument("--gate-errors", type=_float_list)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--fidelity", type=float, default=res.DEFAULT_FIDELITY)

    p = sub.add_parser("schedule", parents=[common], help="depth schedule for (epsilon, beta)")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--shots-per-round", type=int)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        func, columns = COMMANDS[args.command]
        fmt = args.format
        if fmt is None and args.config:
            fmt = load_config(args.config).get("output.format")
        out = args.out
        if out is None and args.config:
            out = load_config(args.config).get("output.path")
        rows = func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    _emit(render(rows, columns, fmt or "csv"), out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
