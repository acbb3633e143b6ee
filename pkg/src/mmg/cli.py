"""Command-line surface.

Subcommands: ``run`` (single game), ``ensemble`` (multi-seed summaries),
``sweep`` (parameter sweep table), ``figure`` (canned experiment datasets),
``predict`` (closed-form occupancies). Flags override config-file keys.
Exit codes: 0 success, 1 usage, 2 configuration error, 3 runtime failure.
Data goes to files or stdout; diagnostics go to stderr. MMG_OUT_DIR sets
the default output directory for ``figure``.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, GameConfig
from .engine import run as run_game
from .experiments import (
    FIGURE_NAMES,
    SweepSpec,
    ensemble_run,
    figure_dataset,
    q_sweep,
    sweep_table,
)
from .io import (
    ParsedConfig,
    emit_records,
    format_number,
    make_manifest,
    parse_config,
    render_records,
    render_table,
    serialize_manifest,
)
from .metrics import predicted_irregular, predicted_occupancies

__all__ = ["main", "cli_main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="mmg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", type=Path, help="key=value config file")
        p.add_argument("--seed", type=int, help="game seed (required unless in config)")
        p.add_argument("-T", "--ticks", type=int, dest="T", help="ticks to play")
        p.add_argument("--N", type=int, help="agent count")
        p.add_argument("--K", type=int, help="market count")
        p.add_argument("--s", type=int, help="strategies per market per agent")
        p.add_argument("--m", type=int, help="memory length")
        p.add_argument("--payoff", choices=("linear", "sign", "scaled"))
        p.add_argument("--topology", choices=("regular", "irregular"))
        p.add_argument("--n1", type=int, help="agents on market 1 only (irregular)")
        p.add_argument("--n2", type=int, help="agents on both markets (irregular)")
        p.add_argument("--tie-break", dest="tie_break", choices=("random", "lowest-index"))
        p.add_argument("--zero-demand", dest="zero_demand", choices=("coin", "plus-one"))
        p.add_argument("--init-utilities", dest="init_utilities", choices=("zero", "uniform"))
        p.add_argument("--u-low", dest="u_low", type=float)
        p.add_argument("--u-high", dest="u_high", type=float)

    p_run = sub.add_parser("run", help="play one game and emit its records")
    add_config_flags(p_run)
    p_run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p_run.add_argument("--out", type=Path, help="records file (default stdout)")
    p_run.add_argument("--manifest", type=Path, help="write a provenance manifest here")

    p_ens = sub.add_parser("ensemble", help="summarize an ensemble of seeded runs")
    add_config_flags(p_ens)
    p_ens.add_argument("--seeds", type=int, help="runs in the ensemble")
    p_ens.add_argument("--out", type=Path, help="summary CSV (default stdout)")

    p_sweep = sub.add_parser("sweep", help="ensemble sweep over N or n1")
    add_config_flags(p_sweep)
    p_sweep.add_argument("--seeds", type=int, help="runs per swept value")
    p_sweep.add_argument("--out", type=Path, help="sweep table CSV (default stdout)")

    p_fig = sub.add_parser("figure", help="generate a canned experiment dataset")
    p_fig.add_argument("name", choices=FIGURE_NAMES)
    p_fig.add_argument("--out", type=Path, help="output directory (default $MMG_OUT_DIR or .)")
    p_fig.add_argument("--seed", type=int, default=0, help="master seed")
    p_fig.add_argument("-T", "--ticks", type=int, dest="T")
    p_fig.add_argument("--seeds", type=int, help="runs per ensemble point")

    p_pred = sub.add_parser("predict", help="closed-form asymptotic occupancies")
    p_pred.add_argument("--N", type=int, help="agent count (regular)")
    p_pred.add_argument("--K", type=int, default=2, help="market count (regular)")
    p_pred.add_argument("--s", type=int, default=2, help="strategies per market")
    p_pred.add_argument("--n1", type=int, help="exclusive agents (irregular)")
    p_pred.add_argument("--n2", type=int, help="shared agents (irregular)")
    return parser


_CONFIG_FLAG_KEYS = (
    "N", "K", "s", "m", "seed", "T", "payoff", "topology", "n1", "n2",
    "tie_break", "zero_demand", "init_utilities", "u_low", "u_high", "seeds",
)


def _load_config(args) -> ParsedConfig:
    text = ""
    if args.config is not None:
        text = Path(args.config).read_text()
    overrides = {k: getattr(args, k, None) for k in _CONFIG_FLAG_KEYS}
    return parse_config(text, overrides=overrides)


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _cmd_run(args) -> int:
    parsed = _load_config(args)
    if parsed.ticks is None:
        raise ConfigError("T: required for run")
    records = run_game(parsed.game, parsed.ticks)
    text = render_records(records, args.format)
    _write(text, args.out)
    if args.manifest is not None:
        manifest = make_manifest(parsed.game, parsed.ticks, args.format, text)
        _write(serialize_manifest(manifest), args.manifest)
    return 0


def _summary_table(summaries, k_markets: int) -> str:
    lines = []
    header = [
        "run", "seed", "big_market", "split", "mode", "tau0", "nu",
        "o_big", "o_small", "var_big", "var_small",
    ]
    header += [f"o_m{k + 1}" for k in range(k_markets)]
    header += [f"var_m{k + 1}" for k in range(k_markets)]
    header += ["critical_mu", "n_recurrences", "mean_c_at_recurrence", "error"]
    lines.append(",".join(header))
    for s in summaries:
        if s.failed:
            row = [str(s.run_index), str(s.seed)] + [""] * (len(header) - 3) + [s.error]
        else:
            crit = s.critical
            row = [
                str(s.run_index),
                str(s.seed),
                str(s.big_market),
                "1" if s.split else "0",
                s.mode,
                "" if s.tau0 is None else str(s.tau0),
                format_number(s.nu),
                format_number(s.stats.mean_occupancy[s.big_market]),
                format_number(s.stats.mean_occupancy[s.small_market]),
                format_number(s.stats.per_capita_var[s.big_market]),
                format_number(s.stats.per_capita_var[s.small_market]),
            ]
            row += [format_number(v) for v in s.stats.mean_occupancy]
            row += [format_number(v) for v in s.stats.per_capita_var]
            row += [
                "" if crit is None else str(crit.history),
                "0" if crit is None else str(len(crit.recurrences)),
                "" if s.mean_c_at_recurrence is None else format_number(s.mean_c_at_recurrence),
                "",
            ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _cmd_ensemble(args) -> int:
    parsed = _load_config(args)
    if parsed.ticks is None:
        raise ConfigError("T: required for ensemble")
    if parsed.n_seeds is None:
        raise ConfigError("seeds: required for ensemble")
    summaries = ensemble_run(parsed.game, parsed.ticks, parsed.n_seeds, window=parsed.window)
    _write(_summary_table(summaries, parsed.game.n_markets), args.out)
    return 0


def _cmd_sweep(args) -> int:
    parsed = _load_config(args)
    if parsed.sweep is None:
        raise ConfigError("sweep: the sweep command needs sweep= and values= keys")
    if parsed.ticks is None:
        raise ConfigError("T: required for sweep")
    spec = SweepSpec(
        base=parsed.game,
        param=parsed.sweep.param,
        values=parsed.sweep.values,
        n_seeds=parsed.n_seeds or 10,
        ticks=parsed.ticks,
        window=parsed.window,
        n2=parsed.game.topology.n2,
    )
    points = q_sweep(spec)
    value_col = "N" if spec.param == "N" else "N1"
    _write(render_table(sweep_table(points, value_col)), args.out)
    return 0


def _cmd_figure(args) -> int:
    out_dir = args.out or Path(os.environ.get("MMG_OUT_DIR", "."))
    overrides = {"seed": args.seed}
    if args.T is not None:
        overrides["ticks"] = args.T
    if args.seeds is not None:
        overrides["n_seeds"] = args.seeds
    tables = figure_dataset(args.name, **overrides)
    out_dir.mkdir(parents=True, exist_ok=True)
    for stem, table in tables.items():
        path = out_dir / f"{stem}.csv"
        path.write_text(render_table(table))
        print(f"wrote {path}", file=sys.stderr)
    return 0


def _cmd_predict(args) -> int:
    if args.n1 is not None or args.n2 is not None:
        if args.n1 is None or args.n2 is None:
            raise UsageError("predict: irregular prediction needs both --n1 and --n2")
        values = predicted_irregular(args.n1, args.n2, args.s)
    else:
        if args.N is None:
            raise UsageError("predict: need --N (regular) or --n1/--n2 (irregular)")
        values = predicted_occupancies(args.N, args.K, args.s)
    print(" ".join(format_number(v) for v in values))
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "ensemble": _cmd_ensemble,
    "sweep": _cmd_sweep,
    "figure": _cmd_figure,
    "predict": _cmd_predict,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except Exception as exc:  # noqa: BLE001 - a CLI reports, it does not crash
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_main())
