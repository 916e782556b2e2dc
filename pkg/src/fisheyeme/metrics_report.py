"""Report rows and their CSV / aligned-text renderings."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

CSV_HEADER = "sequence,frames,method,block_size,search_range,mean_psnr_db,delta_vs_tme_db"


@dataclass(frozen=True)
class ReportRow:
    sequence: str
    frames: str
    method: str
    block_size: int
    search_range: int
    mean_psnr_db: float
    delta_vs_tme_db: float | None

    def with_delta(self, delta: float) -> "ReportRow":
        return replace(self, delta_vs_tme_db=delta)


def _fmt(value: float | None) -> str:
    if value is None:
        return "n/a"
    if math.isinf(value):
        return "inf"
    return f"{value:.4f}"


def render_csv(rows: list[ReportRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.sequence},{r.frames},{r.method},{r.block_size},"
            f"{r.search_range},{_fmt(r.mean_psnr_db)},{_fmt(r.delta_vs_tme_db)}")
    return "\n".join(lines) + "\n"


def render_table(rows: list[ReportRow]) -> str:
    header = ("sequence", "frames", "method", "bs", "range",
              "mean_psnr_db", "delta_vs_tme_db")
    cells = [header]
    flagged = False
    for r in rows:
        mean = _fmt(r.mean_psnr_db)
        if math.isinf(r.mean_psnr_db):
            mean += "*"
            flagged = True
        cells.append((r.sequence, r.frames, r.method, str(r.block_size),
                      str(r.search_range), mean, _fmt(r.delta_vs_tme_db)))
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    out = []
    for row in cells:
        out.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    if flagged:
        out.append("* at least one predicted frame was identical to the source")
    return "\n".join(out) + "\n"
