"""Render evaluation results and corpus statistics.

Every aggregate surface (text table, CSV, JSON, figures) reads from the
same Report/LanguageStats values, so the numbers cannot drift between
formats. Percentages display with exactly two decimals everywhere.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .evaluator import ALL_LANGUAGES, EvalRecord, Report
from .formatter import EditSequenceSample, render_task_text


def fmt_pct(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(cells, pad=" "):
        return "  ".join(c.ljust(w, pad) if i == 0 else c.rjust(w, pad)
                         for i, (c, w) in enumerate(zip(cells, widths)))
    sep = line(["-" * w for w in widths], pad="-")
    out = [line(headers), sep]
    out.extend(line(row) for row in rows)
    return "\n".join(out) + "\n"


# -- evaluation reports ------------------------------------------------------

REPORT_HEADERS = ["Language", "Samples", "Exact", "Partial", "Position", "Judge"]


def _report_row(r: Report) -> list[str]:
    return [
        r.language,
        str(r.count),
        fmt_pct(r.exact_pct),
        fmt_pct(r.partial_pct),
        fmt_pct(r.position_pct),
        fmt_pct(r.judge_pct),
    ]


def format_report_table(reports: list[Report]) -> str:
    return _table(REPORT_HEADERS, [_report_row(r) for r in reports])


def report_csv(reports: list[Report]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["language", "count", "exact_pct", "partial_pct", "position_pct", "judge_pct"]
    )
    for r in reports:
        writer.writerow(
            [
                r.language,
                r.count,
                f"{r.exact_pct:.2f}",
                f"{r.partial_pct:.2f}",
                f"{r.position_pct:.2f}",
                "" if r.judge_pct is None else f"{r.judge_pct:.2f}",
            ]
        )
    return buf.getvalue()


def report_json(reports: list[Report], metadata: dict | None = None) -> str:
    rows = []
    for r in reports:
        d = r.to_dict()
        for key in ("exact_pct", "partial_pct", "position_pct", "judge_pct"):
            if d[key] is not None:
                d[key] = round(d[key], 2)
        rows.append(d)
    payload = {"metadata": metadata or {}, "languages": rows}
    return json.dumps(payload, indent=2) + "\n"


def records_csv(records: list[EvalRecord]) -> str:
    """Per-sample outcome rows, one line per evaluated sample."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "sample_id",
            "language",
            "exact",
            "partial",
            "position",
            "judge",
            "candidate_chunks",
            "error",
        ]
    )
    for rec in records:
        writer.writerow(
            [
                rec.sample_id,
                rec.language,
                str(rec.exact).lower(),
                str(rec.partial).lower(),
                str(rec.position).lower(),
                "" if rec.judge is None else str(rec.judge).lower(),
                "" if rec.candidate_chunks is None else rec.candidate_chunks,
                rec.error or "",
            ]
        )
    return buf.getvalue()


def save_report_figures(reports: list[Report], out_dir: str, prefix: str = "eval") -> list[str]:
    """Write PNG charts for a report set; returns the file paths."""
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    langs = [r.language for r in reports]
    x = range(len(langs))
    metrics = [("Exact", [r.exact_pct for r in reports]),
               ("Partial", [r.partial_pct for r in reports]),
               ("Position", [r.position_pct for r in reports])]
    if any(r.judge_pct is not None for r in reports):
        metrics.append(("Judge", [r.judge_pct or 0.0 for r in reports]))

    paths = []
    width = 0.8 / len(metrics)
    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(langs)), 4))
    for i, (name, values) in enumerate(metrics):
        ax.bar([xi + i * width for xi in x], values, width=width, label=name)
    ax.set_xticks([xi + width * (len(metrics) - 1) / 2 for xi in x])
    ax.set_xticklabels(langs, rotation=30, ha="right")
    ax.set_ylabel("match rate (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    ax.set_title("Next-edit prediction accuracy by language")
    fig.tight_layout()
    path = os.path.join(out_dir, f"{prefix}_metrics.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(langs)), 3.2))
    ax.bar(list(x), [r.count for r in reports], color="#4878a8")
    ax.set_xticks(list(x))
    ax.set_xticklabels(langs, rotation=30, ha="right")
    ax.set_ylabel("samples")
    ax.set_title("Evaluated samples by language")
    fig.tight_layout()
    path = os.path.join(out_dir, f"{prefix}_counts.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths


# -- corpus statistics -------------------------------------------------------


@dataclass
class LanguageStats:
    """Labeling yield for one language bucket."""

    language: str
    samples: int
    positives: int
    positive_rate: float  # percent
    avg_chars: float  # mean serialized task length over positives
    avg_lines: float
    raw_commits: int | None = None  # pre-filter count, when an audit is supplied

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "raw_commits": self.raw_commits,
            "samples": self.samples,
            "positives": self.positives,
            "positive_rate": round(self.positive_rate, 2),
            "avg_chars": round(self.avg_chars, 2),
            "avg_lines": round(self.avg_lines, 2),
        }


def compute_stats(
    labeled_rows: list[dict],
    raw_counts: dict[str, int] | None = None,
) -> list[LanguageStats]:
    """Per-language labeling stats plus an All row.

    labeled_rows are sample dicts carrying a `label` field. Average lengths
    are measured on the serialized task text and only over positives, the
    rows that actually become training samples.
    """
    buckets: dict[str, list[dict]] = {}
    for row in labeled_rows:
        buckets.setdefault(row.get("language") or "Unknown", []).append(row)

    def build(language: str, rows: list[dict]) -> LanguageStats:
        positives = [r for r in rows if r.get("label") == "positive"]
        chars = []
        lines = []
        for row in positives:
            text = render_task_text(EditSequenceSample.from_dict(row)).text
            chars.append(len(text))
            lines.append(len(text.splitlines()))
        n_pos = len(positives)
        raw = None
        if raw_counts is not None:
            if language == ALL_LANGUAGES:
                raw = sum(raw_counts.values())
            else:
                raw = raw_counts.get(language, 0)
        return LanguageStats(
            language=language,
            samples=len(rows),
            positives=n_pos,
            positive_rate=100.0 * n_pos / len(rows) if rows else 0.0,
            avg_chars=sum(chars) / n_pos if n_pos else 0.0,
            avg_lines=sum(lines) / n_pos if n_pos else 0.0,
            raw_commits=raw,
        )

    stats = [build(lang, rows) for lang, rows in sorted(buckets.items())]
    stats.append(build(ALL_LANGUAGES, labeled_rows))
    return stats


STATS_HEADERS = ["Language", "Raw", "Samples", "Positives", "Rate", "AvgChars", "AvgLines"]


def format_stats_table(stats: list[LanguageStats]) -> str:
    rows = []
    for s in stats:
        rows.append(
            [
                s.language,
                "-" if s.raw_commits is None else str(s.raw_commits),
                str(s.samples),
                str(s.positives),
                f"{s.positive_rate:.2f}",
                f"{s.avg_chars:.2f}",
                f"{s.avg_lines:.2f}",
            ]
        )
    return _table(STATS_HEADERS, rows)


def stats_csv(stats: list[LanguageStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["language", "raw_commits", "samples", "positives", "positive_rate", "avg_chars", "avg_lines"]
    )
    for s in stats:
        writer.writerow(
            [
                s.language,
                "" if s.raw_commits is None else s.raw_commits,
                s.samples,
                s.positives,
                f"{s.positive_rate:.2f}",
                f"{s.avg_chars:.2f}",
                f"{s.avg_lines:.2f}",
            ]
        )
    return buf.getvalue()


def save_stats_figures(stats: list[LanguageStats], out_dir: str, prefix: str = "stats") -> list[str]:
    import os

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    langs = [s.language for s in stats]
    x = list(range(len(langs)))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(max(9, 2.2 * len(langs)), 3.6))
    width = 0.4
    ax1.bar([xi - width / 2 for xi in x], [s.samples for s in stats], width=width,
            label="samples", color="#8888bb")
    ax1.bar([xi + width / 2 for xi in x], [s.positives for s in stats], width=width,
            label="positives", color="#55aa77")
    ax1.set_xticks(x)
    ax1.set_xticklabels(langs, rotation=30, ha="right")
    ax1.set_ylabel("count")
    ax1.legend()
    ax1.set_title("Labeling yield")

    ax2.bar(x, [s.positive_rate for s in stats], color="#cc8855")
    ax2.set_xticks(x)
    ax2.set_xticklabels(langs, rotation=30, ha="right")
    ax2.set_ylabel("positive rate (%)")
    ax2.set_ylim(0, 100)
    ax2.set_title("Positive rate")

    fig.tight_layout()
    path = os.path.join(out_dir, f"{prefix}_yield.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
