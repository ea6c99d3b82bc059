"""Robustness report serialization and plain-text rendering.

One CSV row per detector x class x corruption x severity, plus aggregate
rows. Fractions are stored at full precision; rendering scales them to
percentages with two decimals and annotates each grid row's minimum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .metrics import BugRates

#: Column order of robustness.csv. `class` is a class label or "ALL"
#: (pooled bug metrics); `kind` is a corruption kind, "clean", or "ALL"
#: (aggregate); `severity` is 0-5 or "mean" on aggregate rows. Fractional
#: columns are written as fractions, not percentages.
CSV_HEADER = (
    "detector", "class", "kind", "severity", "oa", "ce",
    "br_td", "br_fc", "br_fd", "br_md",
    "cr_td", "cr_fc", "cr_fd", "cr_md",
    "n_det", "n_gt", "gt_misses",
)


@dataclass(frozen=True)
class ReportRow:
    """One robustness.csv row; absent metrics stay None (blank cells)."""

    detector: str
    class_label: str
    kind: str
    severity: int | str
    oa: float | None = None
    ce: float | None = None
    br: BugRates | None = None
    cr: BugRates | None = None
    n_det: int | None = None
    n_gt: int | None = None
    gt_misses: int | None = None


def _float_cell(v):
    return "" if v is None else repr(float(v))


def _int_cell(v):
    return "" if v is None else str(int(v))


def _quad_cells(q):
    if q is None:
        return ["", "", "", ""]
    return [repr(float(v)) for v in q]


def write_report_csv(rows, path):
    """Write rows to ``path`` in CSV_HEADER order, full float precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [r.detector, r.class_label, r.kind, str(r.severity),
                 _float_cell(r.oa), _float_cell(r.ce)]
                + _quad_cells(r.br) + _quad_cells(r.cr)
                + [_int_cell(r.n_det), _int_cell(r.n_gt),
                   _int_cell(r.gt_misses)]
            )


def _parse_float(s):
    return float(s) if s else None


def _parse_int(s):
    return int(s) if s else None


def _parse_quad(cells):
    if all(cells):
        return BugRates(*(float(c) for c in cells))
    return None


def read_report_csv(path):
    """Inverse of write_report_csv; values round-trip bit-exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(
                f"unexpected report header {header!r}; expected {CSV_HEADER}")
        rows = []
        for cells in reader:
            if len(cells) != len(CSV_HEADER):
                raise ValueError(f"malformed report row: {cells!r}")
            sev = cells[3]
            rows.append(ReportRow(
                detector=cells[0],
                class_label=cells[1],
                kind=cells[2],
                severity=int(sev) if sev.isdigit() else sev,
                oa=_parse_float(cells[4]),
                ce=_parse_float(cells[5]),
                br=_parse_quad(cells[6:10]),
                cr=_parse_quad(cells[10:14]),
                n_det=_parse_int(cells[14]),
                n_gt=_parse_int(cells[15]),
                gt_misses=_parse_int(cells[16]),
            ))
    return rows


def _pct(v):
    return f"{v * 100:.2f}"


def _grid_lines(title, per_kind, severities):
    """One metric grid: kinds down, severities across, row min starred."""
    lines = [title]
    head = f"{'kind':<14}" + "".join(f"{'sev' + str(s):>10}" for s in severities)
    lines.append(head)
    for kind, cells in per_kind.items():
        vals = [cells.get(s) for s in severities]
        present = [v for v in vals if v is not None]
        low = min(present) if present else None
        marked = False
        row = f"{kind:<14}"
        for v in vals:
            if v is None:
                row += f"{'':>10}"
                continue
            cell = _pct(v)
            if not marked and low is not None and v == low:
                cell += "*"
                marked = True
            row += f"{cell:>10}"
        lines.append(row)
    return lines


def render_tables(rows, partial=False):
    """Format report rows as plain-text tables; no computation, only rounding."""
    if not rows:
        return "  ".join(CSV_HEADER) + "\n"

    lines = []
    if partial:
        lines.append("note: partial severity coverage; aggregates use "
                     "present cells only")
    lines.append("legend: values are percentages; * marks the row minimum")

    groups = {}
    for r in rows:
        groups.setdefault((r.detector, r.class_label), []).append(r)

    for (detector, class_label), members in groups.items():
        per_cell = [r for r in members if r.kind not in ("clean", "ALL")]
        clean = [r for r in members if r.kind == "clean"]
        severities = sorted({r.severity for r in per_cell
                             if isinstance(r.severity, int)})

        header = f"detector={detector} class={class_label}"
        oa_grid = {}
        ce_grid = {}
        for r in per_cell:
            if not isinstance(r.severity, int):
                continue
            if r.oa is not None:
                oa_grid.setdefault(r.kind, {})[r.severity] = r.oa
            if r.ce is not None:
                ce_grid.setdefault(r.kind, {})[r.severity] = r.ce
        if oa_grid or ce_grid or any(r.oa is not None for r in clean):
            lines.append("")
            lines.append(header)
            for r in clean:
                if r.oa is not None:
                    lines.append(f"clean OA: {_pct(r.oa)}")
            if oa_grid:
                lines.extend(_grid_lines("overall accuracy:", oa_grid, severities))
            if ce_grid:
                lines.extend(_grid_lines("corruption error (points lost):",
                                         ce_grid, severities))

        br_rows = [r for r in members
                   if r.br is not None and r.kind != "ALL"]
        cr_rows = [r for r in members
                   if r.cr is not None and r.kind != "ALL"]
        if br_rows or cr_rows:
            lines.append("")
            lines.append(header)
            if br_rows:
                lines.append("bug rates:")
                lines.append(f"{'kind':<14}{'sev':>5}"
                             + "".join(f"{c:>10}" for c in ("TD", "FC", "FD", "MD")))
                for r in br_rows:
                    lines.append(f"{r.kind:<14}{r.severity!s:>5}"
                                 + "".join(f"{_pct(v):>10}" for v in r.br))
            if cr_rows:
                lines.append("corruption risk (rate shift, points):")
                lines.append(f"{'kind':<14}{'sev':>5}"
                             + "".join(f"{c:>10}" for c in ("TD", "FC", "FD", "MD")))
                for r in cr_rows:
                    lines.append(f"{r.kind:<14}{r.severity!s:>5}"
                                 + "".join(f"{v * 100:>+10.2f}" for v in r.cr))

    agg = [r for r in rows if r.kind == "ALL"]
    if agg:
        lines.append("")
        lines.append("aggregates over the corruption grid:")
        for r in agg:
            parts = [f"detector={r.detector} class={r.class_label}"]
            if r.ce is not None:
                parts.append(f"mCE: {_pct(r.ce)}")
            if r.cr is not None:
                quad = "  ".join(
                    f"{name} {v * 100:+.2f}"
                    for name, v in zip(("TD", "FC", "FD", "MD"), r.cr))
                parts.append(f"mCR: {quad}")
            lines.append("  ".join(parts))

    return "\n".join(lines) + "\n"
