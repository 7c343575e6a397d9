"""CSV persistence of sweep results."""

from __future__ import annotations

import csv
from pathlib import Path

from .sweep import SweepResult, SweepRow

__all__ = ["CSV_HEADER", "DIAGNOSTICS_HEADER", "write_csv", "read_csv", "write_diagnostics", "diagnostics_path", "gnuplot_columns"]

CSV_HEADER = ("power_db", "estimator", "precoder", "metric", "mean", "stderr", "n")
DIAGNOSTICS_HEADER = ("power_db", "estimator", "precoder", "rank_deficient", "n")


def _num(x: float) -> str:
    # 17 significant digits round-trip every double
    return format(x, ".17g")


def _ordered(rows):
    return sorted(rows, key=lambda r: (r.power_db, r.estimator, r.precoder, r.metric))


def write_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in _ordered(result.rows):
            w.writerow([_num(r.power_db), r.estimator, r.precoder, r.metric, _num(r.mean), _num(r.stderr), r.n])


def read_csv(path) -> SweepResult:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [SweepRow(float(p), e, pr, m, float(mean), float(se), int(n)) for p, e, pr, m, mean, se, n in reader]
    return SweepResult(rows=rows)


def diagnostics_path(path) -> Path:
    """Sidecar location: ``results.csv`` -> ``results.diagnostics.csv``."""
    p = Path(path)
    return p.with_name(p.stem + ".diagnostics" + p.suffix)


def write_diagnostics(result: SweepResult, path) -> None:
    """Per (power, estimator, precoder) count of trials whose ZF precoder did not exist."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTICS_HEADER)
        for d in sorted(result.diagnostics, key=lambda d: (d.power_db, d.estimator, d.precoder)):
            w.writerow([_num(d.power_db), d.estimator, d.precoder, d.rank_deficient, d.n])


def gnuplot_columns(result: SweepResult, estimator: str, precoder: str, metric: str) -> str:
    """Whitespace-separated ``power mean stderr`` block for one curve."""
    lines = [f"# {estimator} {precoder} {metric}", "# power_db mean stderr"]
    for r in _ordered(result.rows):
        if (r.estimator, r.precoder, r.metric) == (estimator, precoder, metric):
            lines.append(f"{_num(r.power_db)} {_num(r.mean)} {_num(r.stderr)}")
    return "\n".join(lines) + "\n"
