"""Reproducible experiment driver: config files, sweeps, figure data.

An experiment is described by an INI-style config file (sections: dataset,
channel, sim, sweep, output).  Running it produces one metrics CSV and one
JSON sidecar per grid point plus a manifest; re-running with the same
config and seed reproduces the CSVs byte for byte.
"""

from __future__ import annotations

import configparser
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ValidationError
from .graph import (
    SocialDataset,
    UploadModelParams,
    component_sizes,
    fit_power_law,
    generate_scale_free,
    load_dataset,
    write_dataset,
)
from .metrics import compute_metrics, read_report_csv, write_report_csv
from .simnet import SimConfig, run_simulation
from .stegochannel import profile_from_tables

SWEEPABLE = ("K", "ttl", "q", "Q")

FIGURES = ("ttl_curve", "bw_eff", "duplication", "monthly_cargo",
           "cumulative_cargo")


@dataclass(frozen=True)
class DatasetSpec:
    source: str = "generate"  # generate | load
    nodes: int = 7200
    gamma: float = 2.3
    months: int = 40
    edges_per_node: int = 8
    triangle_prob: float = 0.7
    upload_model: UploadModelParams = field(default_factory=UploadModelParams)
    edges_path: str | None = None
    uploads_path: str | None = None

    def realize(self, rng_seed: int) -> SocialDataset:
        if self.source == "load":
            if not self.edges_path or not self.uploads_path:
                raise ValidationError(
                    "dataset source 'load' needs edges_path and uploads_path"
                )
            return load_dataset(self.edges_path, self.uploads_path)
        return generate_scale_free(
            self.nodes, self.gamma, self.months,
            upload_model=self.upload_model, rng_seed=rng_seed,
            edges_per_node=self.edges_per_node,
            triangle_prob=self.triangle_prob,
        )


@dataclass(frozen=True)
class ExperimentSpec:
    dataset: DatasetSpec
    sim: SimConfig
    Q: int = 75
    q: int = 8
    filtered: bool = False
    sweep: dict = field(default_factory=dict)
    output_dir: str = "out"

    def __post_init__(self):
        if len(self.sweep) > 2:
            raise ValidationError("at most two swept parameters per experiment")
        for name in self.sweep:
            if name not in SWEEPABLE:
                raise ValidationError(
                    f"cannot sweep {name!r}; swept parameters are {SWEEPABLE}"
                )

    def grid(self) -> list[dict]:
        """Cartesian grid of swept parameter assignments (sorted, stable)."""
        points = [{}]
        for name in sorted(self.sweep):
            points = [dict(p, **{name: v}) for p in points
                      for v in self.sweep[name]]
        return points


def _getint(section, key, default):
    return section.getint(key, fallback=default)


def _parse_sweep_values(name: str, raw: str) -> list:
    cast = float if name in () else int
    try:
        return [cast(tok.strip()) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"sweep list for {name} must be integers: {raw!r}") from None


def load_experiment_config(path, seed_override: int | None = None,
                           jobs: int | None = None) -> ExperimentSpec:
    """Parse an experiment config file; missing keys take the defaults."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")

    ds = parser["dataset"] if parser.has_section("dataset") else parser["DEFAULT"]
    defaults = UploadModelParams()
    upload_model = UploadModelParams(
        base_rate=ds.getfloat("upload_base_rate", fallback=defaults.base_rate),
        sigma=ds.getfloat("upload_sigma", fallback=defaults.sigma),
        degree_exponent=ds.getfloat("upload_degree_exponent",
                                    fallback=defaults.degree_exponent),
        churn_prob=ds.getfloat("churn_prob", fallback=defaults.churn_prob),
        dormancy_mean_months=ds.getfloat(
            "dormancy_mean_months", fallback=defaults.dormancy_mean_months),
        activity_cap=ds.getfloat("activity_cap",
                                 fallback=defaults.activity_cap),
    )
    dataset = DatasetSpec(
        source=ds.get("source", fallback="generate"),
        nodes=_getint(ds, "nodes", 7200),
        gamma=ds.getfloat("gamma", fallback=2.3),
        months=_getint(ds, "months", 40),
        edges_per_node=_getint(ds, "edges_per_node", 8),
        triangle_prob=ds.getfloat("triangle_prob", fallback=0.7),
        upload_model=upload_model,
        edges_path=ds.get("edges_path", fallback=None),
        uploads_path=ds.get("uploads_path", fallback=None),
    )
    if dataset.source not in ("generate", "load"):
        raise ValidationError(f"dataset source must be generate|load, "
                              f"got {dataset.source!r}")

    sim_sec = parser["sim"] if parser.has_section("sim") else parser["DEFAULT"]
    ttl = sim_sec.get("ttl", fallback="auto")
    sim = SimConfig(
        K=_getint(sim_sec, "K", 10),
        ttl=None if ttl in ("auto", "") else int(ttl),
        forward_reserve=sim_sec.getfloat("forward_reserve", fallback=0.05),
        infection_rate=sim_sec.getfloat("infection_rate", fallback=0.5),
        botmaster_trials=_getint(sim_sec, "botmaster_trials", 50),
        command_rate=_getint(sim_sec, "command_rate", 1),
        messages_per_image=_getint(sim_sec, "messages_per_image", 1),
        rng_seed=(seed_override if seed_override is not None
                  else _getint(sim_sec, "seed", 0)),
        engine=sim_sec.get("engine", fallback="auto"),
        jobs=jobs if jobs is not None else _getint(sim_sec, "jobs", 1),
    )

    ch = parser["channel"] if parser.has_section("channel") else parser["DEFAULT"]
    Q = _getint(ch, "Q", 75)
    q = _getint(ch, "q", 8)
    filtered = ch.getboolean("filtered", fallback=False)

    sweep = {}
    if parser.has_section("sweep"):
        for name, raw in parser["sweep"].items():
            canonical = {"k": "K", "ttl": "ttl", "q": "q", "big_q": "Q",
                         "quality": "Q"}.get(name, name)
            sweep[canonical] = _parse_sweep_values(canonical, raw)

    out = parser["output"] if parser.has_section("output") else parser["DEFAULT"]
    output_dir = out.get("directory", fallback="out")
    return ExperimentSpec(dataset=dataset, sim=sim, Q=Q, q=q,
                          filtered=filtered, sweep=sweep,
                          output_dir=output_dir)


def _point_label(point: dict) -> str:
    if not point:
        return "single"
    return "_".join(f"{name}{point[name]}" for name in sorted(point))


def run_experiment(spec: ExperimentSpec, out_dir=None) -> dict:
    """Run every grid point and write metrics CSV/JSON plus a manifest.

    Returns the manifest dictionary.
    """
    out = Path(out_dir if out_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    dataset = spec.dataset.realize(spec.sim.rng_seed)
    points = []
    for point in spec.grid():
        label = _point_label(point)
        sim = spec.sim
        if "K" in point or "ttl" in point:
            sim = SimConfig(**{
                **{f: getattr(sim, f) for f in (
                    "K", "ttl", "forward_reserve", "infection_rate",
                    "botmaster_trials", "command_rate", "messages_per_image",
                    "rng_seed", "engine", "jobs")},
                **{k: v for k, v in point.items() if k in ("K", "ttl")},
            })
        profile = profile_from_tables(point.get("Q", spec.Q),
                                      point.get("q", spec.q),
                                      filtered=spec.filtered)
        result = run_simulation(dataset, sim, profile)
        report = compute_metrics(result)
        csv_path = out / f"{label}.csv"
        write_report_csv(report, csv_path)
        sidecar = {
            "label": label,
            "params": {
                "K": sim.K, "ttl": sim.ttl, "Q": profile.Q, "q": profile.q,
                "filtered": spec.filtered,
            },
            "summary": {
                "channel_efficiency": report.channel_efficiency,
                "channel_bandwidth": report.channel_bandwidth,
                "duplication_fraction": report.duplication_fraction,
                "botnet_bandwidth_msgs": report.botnet_bandwidth_msgs,
                "botnet_bandwidth_mb": report.botnet_bandwidth_mb,
            },
        }
        json_path = out / f"{label}.json"
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        points.append({"label": label, "params": sidecar["params"],
                       "csv": csv_path.name, "json": json_path.name})
    manifest = {
        "version": __version__,
        "seed": spec.sim.rng_seed,
        "trials": spec.sim.botmaster_trials,
        "dataset": {
            "source": spec.dataset.source,
            "nodes": dataset.node_count,
            "months": dataset.months,
            "edges": len(dataset.edges),
        },
        "sweep": {k: list(v) for k, v in spec.sweep.items()},
        "points": points,
        "wall_time_s": round(time.time() - started, 3),
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _load_points(metric_csvs) -> list[tuple[dict, dict]]:
    """(params, summary) per metrics CSV, via each file's JSON sidecar."""
    loaded = []
    for csv_path in metric_csvs:
        csv_path = Path(csv_path)
        sidecar = csv_path.with_suffix(".json")
        if not sidecar.exists():
            raise ValidationError(f"missing sidecar {sidecar} for {csv_path}")
        with open(sidecar, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        loaded.append((meta["params"], meta["summary"], csv_path))
    return loaded


def emit_figure_data(metric_csvs, figure: str, out_path) -> Path:
    """Write a plot-ready (x, y[, series]) CSV for one figure kind."""
    if figure not in FIGURES:
        raise ValidationError(f"unknown figure {figure!r}; choose from {FIGURES}")
    out_path = Path(out_path)
    rows = []
    if figure in ("monthly_cargo", "cumulative_cargo"):
        if len(metric_csvs) != 1:
            raise ValidationError(f"{figure} needs exactly one metrics CSV")
        report = read_report_csv(metric_csvs[0])
        header = ["month", "delivered_unique"]
        running = 0.0
        for row in report["months"]:
            y = row["delivered_unique"]
            if figure == "cumulative_cargo":
                running += y
                y = running
            rows.append([row["month"], y])
    else:
        loaded = _load_points(metric_csvs)
        if figure == "ttl_curve":
            header = ["ttl", "channel_efficiency"]
            for params, summary, _ in sorted(loaded, key=lambda p: p[0]["ttl"]):
                rows.append([params["ttl"], summary["channel_efficiency"]])
        elif figure == "bw_eff":
            header = ["K", "channel_bandwidth", "channel_efficiency"]
            for params, summary, _ in sorted(loaded, key=lambda p: p[0]["K"]):
                rows.append([params["K"], summary["channel_bandwidth"],
                             summary["channel_efficiency"]])
        else:  # duplication
            header = ["K", "duplication_fraction"]
            for params, summary, _ in sorted(loaded, key=lambda p: p[0]["K"]):
                rows.append([params["K"], summary["duplication_fraction"]])
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                format(v, ".10g") if isinstance(v, float) else str(v)
                for v in row) + "\n")
    return out_path


def describe_dataset(dataset: SocialDataset) -> dict:
    """Structural summary used by the CLI after generate/load."""
    comps = component_sizes(dataset)
    summary = {
        "nodes": dataset.node_count,
        "edges": len(dataset.edges),
        "months": dataset.months,
        "components": len(comps),
        "largest_component": comps[0] if comps else 0,
        "mean_monthly_uploads": (float(dataset.uploads.mean())
                                 if dataset.months else 0.0),
    }
    try:
        summary["fitted_gamma"] = round(fit_power_law(dataset).gamma, 3)
    except Exception:
        summary["fitted_gamma"] = None
    return summary


def write_generated_dataset(spec: DatasetSpec, rng_seed: int, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = spec.realize(rng_seed)
    write_dataset(dataset, out / "edges.txt", out / "uploads.csv")
    summary = describe_dataset(dataset)
    summary["seed"] = rng_seed
    with open(out / "dataset.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
