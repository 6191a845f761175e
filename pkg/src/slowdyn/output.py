"""CSV output of diagnostic histories and twin-run curves.

Numbers are written with ``%.17g`` so every double round-trips exactly.
The diagnostics header is :meth:`DiagnosticsRecord.columns` followed by one
``margin_<bound>`` column per entry of the bound report (``rhs - lhs``).
"""

import csv

from .diagnostics import DiagnosticsRecord

__all__ = ["write_diagnostics_csv", "write_twin_csv", "fmt"]


def fmt(x):
    return "%.17g" % x


def write_diagnostics_csv(records, report, path):
    """One header line plus one row per record."""
    kz = records[0].kz_max if records else 0
    names = report.names() if report is not None else []
    header = DiagnosticsRecord.columns(kz) + [f"margin_{n}" for n in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, rec in enumerate(records):
            row = [fmt(v) for v in rec.as_row().values()]
            if names:
                row += [fmt(report.rows[i][n].margin) for n in names]
            writer.writerow(row)


def write_twin_csv(result, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "D", "fit_log_D"])
        for t, d in zip(result.times, result.D):
            writer.writerow([fmt(t), fmt(d), fmt(result.intercept + result.slope * t)])
