"""Seed aggregation and relative-improvement tables.

Standard deviations use the population formula (divide by n). Relative
deltas are ``(baseline - ghacpp) / baseline`` in percent, so a positive delta
means GHACPP produced the smaller value.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable

from .baseline_stc import BASELINE_LABEL
from .executor import RunMetrics

log = logging.getLogger(__name__)

METRIC_FIELDS = tuple(f.name for f in fields(RunMetrics))
CSV_HEADER = ("scenario", "algo", "seed") + METRIC_FIELDS
SD_NOTE = "# sd is the population standard deviation (divide by n)"


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    algo: str
    seed: int
    metrics: RunMetrics


@dataclass(frozen=True)
class Stat:
    n: int
    mean: float
    min: float
    max: float
    sd: float


@dataclass(frozen=True)
class Delta:
    scenario: str
    metric: str
    ghacpp_mean: float
    baseline_mean: float
    delta_pct: float


@dataclass
class AggregateReport:
    stats: dict  # (scenario, algo, metric) -> Stat
    deltas: list

    def stat(self, scenario: str, algo: str, metric: str) -> Stat:
        return self.stats[(scenario, algo, metric)]

    def delta(self, scenario: str, metric: str) -> Delta:
        for d in self.deltas:
            if d.scenario == scenario and d.metric == metric:
                return d
        raise KeyError((scenario, metric))


def describe(values: Iterable[float]) -> Stat:
    vals = sorted(float(v) for v in values)
    if not vals:
        raise ValueError("no values to describe")
    n = len(vals)
    mean = math.fsum(vals) / n
    var = math.fsum((v - mean) ** 2 for v in vals) / n
    return Stat(n, mean, vals[0], vals[-1], math.sqrt(var))


def relative_delta(ghacpp: float, baseline: float) -> float:
    """Percentage reduction of ``ghacpp`` relative to ``baseline``; NaN when the baseline is zero."""
    if baseline == 0:
        return math.nan
    return 100.0 * (baseline - ghacpp) / baseline


def _normalise_algo(algo: str) -> str:
    return "stc" if algo in ("stc", BASELINE_LABEL) else algo


def aggregate(runs: Iterable) -> AggregateReport:
    """Aggregate ``(scenario, algo, seed, RunMetrics)`` tuples or :class:`RunRecord` objects.

    Metrics left as None (for example an unrecorded wall-clock) are skipped.
    """
    records = [r if isinstance(r, RunRecord) else RunRecord(*r) for r in runs]
    if not records:
        raise ValueError("aggregate needs at least one run")
    groups: dict = {}
    for r in records:
        groups.setdefault((r.scenario, _normalise_algo(r.algo)), []).append(r.metrics)

    stats = {}
    for (scenario, algo), ms in groups.items():
        for name in METRIC_FIELDS:
            vals = [getattr(m, name) for m in ms if getattr(m, name) is not None]
            if vals:
                stats[(scenario, algo, name)] = describe(vals)

    deltas = []
    for scenario in sorted({s for s, _ in groups}):
        if (scenario, "ghacpp") not in groups or (scenario, "stc") not in groups:
            log.warning("scenario %s lacks a ghacpp/stc pair; no delta rows", scenario)
            continue
        for name in METRIC_FIELDS:
            g = stats.get((scenario, "ghacpp", name))
            b = stats.get((scenario, "stc", name))
            if g is None or b is None:
                continue
            deltas.append(Delta(scenario, name, g.mean, b.mean, relative_delta(g.mean, b.mean)))
    return AggregateReport(dict(sorted(stats.items())), deltas)


# --------------------------------------------------------------------------
# CSV I/O
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metrics_row(scenario: str, algo: str, seed: int, m: RunMetrics) -> list[str]:
    d = asdict(m)
    return [scenario, algo, str(seed)] + [_fmt(d[k]) for k in METRIC_FIELDS]


def write_metrics_csv(fh, records: Iterable[RunRecord]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: (r.scenario, r.algo, r.seed)):
        w.writerow(metrics_row(r.scenario, r.algo, r.seed, r.metrics))


def read_metrics_csv(fh) -> list[RunRecord]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError("unexpected metrics CSV header")
    out = []
    for row in reader:
        vals = {}
        for k in METRIC_FIELDS:
            raw = row[k]
            if raw == "":
                vals[k] = None
            elif k in ("n_turns", "irradiation_events"):
                vals[k] = int(raw)
            else:
                vals[k] = float(raw)
        out.append(RunRecord(row["scenario"], row["algo"], int(row["seed"]), RunMetrics(**vals)))
    return out


def report_csv(report: AggregateReport) -> str:
    buf = io.StringIO()
    buf.write(SD_NOTE + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario", "algo", "metric", "n", "mean", "min", "max", "sd"))
    for (scenario, algo, metric), s in report.stats.items():
        w.writerow((scenario, algo, metric, s.n, repr(s.mean), repr(s.min), repr(s.max), repr(s.sd)))
    return buf.getvalue()


def deltas_csv(report: AggregateReport) -> str:
    buf = io.StringIO()
    buf.write("# delta_pct = 100 * (baseline - ghacpp) / baseline\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scenario", "metric", "ghacpp_mean", "baseline_mean", "delta_pct"))
    for d in report.deltas:
        w.writerow((d.scenario, d.metric, repr(d.ghacpp_mean), repr(d.baseline_mean), repr(d.delta_pct)))
    return buf.getvalue()
