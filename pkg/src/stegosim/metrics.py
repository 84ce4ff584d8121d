"""Routing metrics over delivery accounting, and message-to-megabyte math.

MB means 2**20 bytes throughout; that is the convention under which the
delivered-message bandwidth arithmetic lands on round figures.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError, ValidationError
from .simnet import RunResult

_MB = 8 * 2**20  # bits per megabyte


def bandwidth_mb(delivered_msgs: float, bits_per_msg: int, months: int) -> float:
    """Megabytes per month carried by delivered messages.

    Pass per-month counts with months=1, or run totals with the run length
    to amortize.
    """
    if months < 1:
        raise ValidationError("months must be >= 1")
    return delivered_msgs * bits_per_msg / _MB / months


@dataclass(frozen=True)
class MetricsReport:
    """The four routing metrics plus their per-month series.

    channel_efficiency: per-bot fraction of generated cargo uniquely
        delivered, averaged over bots that generated anything.
    channel_bandwidth: unique deliveries per bot per month.
    duplication_fraction: duplicate arrivals over all arrivals.
    botnet_bandwidth_msgs / _mb: unique deliveries per month, as messages
        and as megabytes at the profile's bits per message.
    per_month rows carry (month, generated, delivered_unique,
        delivered_duplicate, duplication_fraction | None).
    """

    channel_efficiency: float
    channel_bandwidth: float
    duplication_fraction: float
    botnet_bandwidth_msgs: float
    botnet_bandwidth_mb: float
    bot_count: int
    months: int
    trials: int
    bits_per_message: int
    per_month: tuple

    def to_dict(self) -> dict:
        return {
            "channel_efficiency": self.channel_efficiency,
            "channel_bandwidth": self.channel_bandwidth,
            "duplication_fraction": self.duplication_fraction,
            "botnet_bandwidth_msgs": self.botnet_bandwidth_msgs,
            "botnet_bandwidth_mb": self.botnet_bandwidth_mb,
            "bot_count": self.bot_count,
            "months": self.months,
            "trials": self.trials,
            "bits_per_message": self.bits_per_message,
            "per_month": [list(row) for row in self.per_month],
        }


def compute_metrics(result: RunResult) -> MetricsReport:
    """Reduce delivery accounting to the four routing metrics.

    Efficiency averages over bots with at least one generated message;
    a run where nothing was generated has no defined efficiency.
    """
    total_generated = float(result.generated_per_month.sum())
    if result.months == 0 or total_generated == 0:
        raise UndefinedMetricError("no cargo was generated; efficiency undefined")
    generators = result.per_bot_generated > 0
    ratios = (result.per_bot_delivered[generators]
              / result.per_bot_generated[generators])
    efficiency = float(ratios.mean())
    unique = float(result.delivered_unique_per_month.sum())
    dup = float(result.delivered_duplicate_per_month.sum())
    arrivals = unique + dup
    dup_fraction = dup / arrivals if arrivals > 0 else 0.0
    bandwidth = unique / (result.bot_count * result.months)
    per_month = []
    for m in range(result.months):
        u = float(result.delivered_unique_per_month[m])
        d = float(result.delivered_duplicate_per_month[m])
        frac = d / (u + d) if u + d > 0 else None
        per_month.append(
            (m, float(result.generated_per_month[m]), u, d, frac)
        )
    return MetricsReport(
        channel_efficiency=efficiency,
        channel_bandwidth=bandwidth,
        duplication_fraction=dup_fraction,
        botnet_bandwidth_msgs=unique / result.months,
        botnet_bandwidth_mb=bandwidth_mb(unique, result.bits_per_message,
                                         result.months),
        bot_count=result.bot_count,
        months=result.months,
        trials=result.trials,
        bits_per_message=result.bits_per_message,
        per_month=tuple(per_month),
    )


_CSV_COLUMNS = [
    "month", "generated", "delivered_unique", "delivered_duplicate",
    "duplication_fraction", "channel_efficiency", "channel_bandwidth",
    "botnet_bandwidth_msgs", "botnet_bandwidth_mb", "reason",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            raise ValidationError("refusing to serialize NaN")
        return format(value, ".10g")
    return str(value)


def write_report_csv(report: MetricsReport, path) -> None:
    """One row per month plus a summary row; undefined cells stay empty
    with an explanation in the reason column, never NaN."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for month, generated, unique, dup, frac in report.per_month:
            reason = "" if frac is not None else "no arrivals this month"
            writer.writerow([
                _fmt(month), _fmt(generated), _fmt(unique), _fmt(dup),
                _fmt(frac), "", "", "", "", reason,
            ])
        writer.writerow([
            "summary",
            _fmt(sum(r[1] for r in report.per_month)),
            _fmt(sum(r[2] for r in report.per_month)),
            _fmt(sum(r[3] for r in report.per_month)),
            _fmt(report.duplication_fraction),
            _fmt(report.channel_efficiency),
            _fmt(report.channel_bandwidth),
            _fmt(report.botnet_bandwidth_msgs),
            _fmt(report.botnet_bandwidth_mb),
            "",
        ])


def write_report_json(report: MetricsReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report_csv(path) -> dict:
    """Parse a metrics CSV back into {'months': [...], 'summary': {...}}."""
    months = []
    summary = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _CSV_COLUMNS:
            raise ValidationError(f"unexpected metrics CSV schema in {path}")
        for row in reader:
            parsed = {
                key: (float(row[key]) if row[key] != "" else None)
                for key in _CSV_COLUMNS if key not in ("month", "reason")
            }
            parsed["reason"] = row["reason"]
            if row["month"] == "summary":
                summary = parsed
            else:
                parsed["month"] = int(row["month"])
                months.append(parsed)
    if summary is None:
        raise ValidationError(f"metrics CSV {path} lacks a summary row")
    return {"months": months, "summary": summary}
