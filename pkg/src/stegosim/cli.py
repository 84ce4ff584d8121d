"""Command-line driver: dataset generation, experiments, figure data, tables.

Exit codes: 0 success, 1 validation/config error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import StegosimError, ValidationError
from .experiment import (
    FIGURES,
    emit_figure_data,
    load_experiment_config,
    run_experiment,
    write_generated_dataset,
)
from .stegochannel import Q_GRID, Q_REDUNDANCY_GRID, ber_table, capacity_table


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stegosim",
        description="Covert-channel network simulator: stego image channels "
                    "and restricted-flooding routing on social graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic dataset")
    gen.add_argument("--config", required=True, help="experiment config file")
    gen.add_argument("--seed", type=int, default=None, help="override RNG seed")
    gen.add_argument("--out", default=None, help="output directory")

    run = sub.add_parser("run", help="run an experiment (sweeps included)")
    run.add_argument("--config", required=True, help="experiment config file")
    run.add_argument("--seed", type=int, default=None, help="override RNG seed")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--jobs", type=int, default=None,
                     help="parallel botmaster trials")
    run.add_argument("--trace", default=None,
                     help="write a JSON-lines transmission log here "
                          "(single-trial runs; forces the reference engine)")

    fig = sub.add_parser("figures", help="emit plot-ready data from metrics CSVs")
    fig.add_argument("--figure", required=True, choices=FIGURES)
    fig.add_argument("--out", required=True, help="output file")
    fig.add_argument("csvs", nargs="+", help="metrics CSV files")

    tab = sub.add_parser("tables", help="dump the bundled channel tables")
    tab.add_argument("--table", choices=("ber", "ber-filtered", "capacity"),
                     default="ber")
    return parser


def _cmd_generate(args) -> int:
    spec = load_experiment_config(args.config, seed_override=args.seed)
    out = args.out if args.out is not None else spec.output_dir
    summary = write_generated_dataset(spec.dataset, spec.sim.rng_seed, out)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _run_with_trace(spec, out_dir, trace_path) -> int:
    # Trace runs use the reference engine on a single trial so every
    # transmission can be logged.
    from .metrics import compute_metrics, write_report_csv
    from .simnet import infect, place_botmaster, run_trial

    dataset = spec.dataset.realize(spec.sim.rng_seed)
    infected = infect(dataset, spec.sim.infection_rate, spec.sim.rng_seed)
    botmaster = place_botmaster(infected, 0, spec.sim.rng_seed)
    from .stegochannel import profile_from_tables

    profile = profile_from_tables(spec.Q, spec.q, filtered=spec.filtered)
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(trace_path, "w", encoding="utf-8") as fh:
        def trace(event):
            fh.write(json.dumps(event, sort_keys=True) + "\n")

        result = run_trial(dataset, spec.sim, profile, infected, botmaster,
                           trace=trace, engine="python")
    write_report_csv(compute_metrics(result), out / "single.csv")
    print(f"traced 1 trial (botmaster {botmaster}) -> {trace_path}")
    return 0


def _cmd_run(args) -> int:
    spec = load_experiment_config(args.config, seed_override=args.seed,
                                  jobs=args.jobs)
    if args.trace:
        return _run_with_trace(spec, args.out, args.trace)
    manifest = run_experiment(spec, out_dir=args.out)
    print(json.dumps({k: manifest[k] for k in ("seed", "trials", "points",
                                               "wall_time_s")},
                     indent=2, sort_keys=True))
    return 0


def _cmd_figures(args) -> int:
    path = emit_figure_data(args.csvs, args.figure, args.out)
    print(f"wrote {path}")
    return 0


def _cmd_tables(args) -> int:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    if args.table == "capacity":
        writer.writerow(["q", "capacity_bits"])
        for q, bits in sorted(capacity_table().items()):
            writer.writerow([q, bits])
    else:
        table = ber_table(filtered=(args.table == "ber-filtered"))
        writer.writerow(["Q"] + [f"q{q}" for q in Q_REDUNDANCY_GRID])
        for big_q in Q_GRID:
            writer.writerow([big_q] + [format(table[(big_q, q)], ".4f")
                                       for q in Q_REDUNDANCY_GRID])
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "generate": _cmd_generate,
        "run": _cmd_run,
        "figures": _cmd_figures,
        "tables": _cmd_tables,
    }[args.command]
    try:
        return handler(args)
    except (ValidationError, StegosimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
