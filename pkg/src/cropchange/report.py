"""CSV and Markdown writers.

CSVs keep full float precision (``repr``); Markdown tables round areas to
whole kha and rates to two decimals, mirroring the published tables.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path


def fnum(x):
    """Full-precision, locale-free float text; empty for NaN."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_csv(path, header, rows):
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fnum(v) if isinstance(v, float) else v for v in row])


def round_half_up(x):
    return math.floor(x + 0.5)


def kha(x):
    return f"{round_half_up(x / 1000.0):,}"


def rate(x):
    return "-" if x is None or math.isnan(x) else f"{x:.2f}"


def pm(value, half, fmt=rate):
    if half is None or (isinstance(half, float) and math.isnan(half)):
        return fmt(value)
    return f"{fmt(value)} ± {fmt(half)}"


def markdown_table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


AREA_HEADER = ("class", "label", "proportion", "se_proportion", "area_ha", "ci95_ha")


def area_rows(estimate, prefix=()):
    return [tuple(prefix) + r for r in estimate.rows()]


def area_markdown(estimate, title):
    rows = [(lab, f"{kha(a)} ± {kha(ci)}") for _, lab, _, _, a, ci in estimate.rows()]
    return f"### {title}\n\n" + markdown_table(("Class", "Area (kha)"), rows)


def summary_rows(estimate):
    """``label, area, ci95`` rounded to whole hectares."""
    return [(lab, round_half_up(a), round_half_up(ci)) for _, lab, _, _, a, ci in estimate.rows()]


def accuracy_markdown(report, labels, title):
    rows = []
    for c in report.classes:
        rows.append((
            labels.get(c.code, str(c.code)),
            pm(c.users_accuracy, report.half_width("users_accuracy", c.code)),
            pm(c.producers_accuracy, report.half_width("producers_accuracy", c.code)),
            rate(c.tpr),
            rate(c.fpr),
        ))
    body = markdown_table(("Class", "Precision (UA)", "Recall (PA)", "TPR", "FPR"), rows)
    oa = pm(report.overall_accuracy, report.overall_accuracy_ci95)
    return f"### {title}\n\nOverall accuracy: {oa}\n\n" + body
