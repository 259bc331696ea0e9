"""Sweep CSV export.

Floats are written with repr(), the shortest decimal that parses back to
the same double, so files re-read to identical values on any platform.
"""

import csv
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from mamlrates.models import SweepRow

SWEEP_COLUMNS = (
    "axis_value",
    "theory_loss",
    "mc_mean",
    "mc_stderr",
    "runs",
    "discarded_runs",
)


def sweep_to_csv(rows: list[SweepRow]) -> str:
    """Render sweep rows as CSV text with a header line.

    Args:
        rows: Sweep rows in grid order.

    Returns:
        CSV text ending in a newline.
    """
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(
            f"{row.axis_value!r},{row.theory_loss!r},{row.mc_mean!r},"
            f"{row.mc_stderr!r},{row.runs},{row.discarded_runs}"
        )
    return "\n".join(lines) + "\n"


def theory_curve_to_csv(axis: str, xs: ArrayLike, ys: ArrayLike) -> str:
    """Render a closed-form loss curve as two-column CSV (axis name, theory_loss)."""
    lines = [f"{axis},theory_loss"]
    for x, y in zip(np.asarray(xs).tolist(), np.asarray(ys).tolist(), strict=True):
        lines.append(f"{float(x)!r},{float(y)!r}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows: list[SweepRow], path: str | Path) -> Path:
    """Write sweep rows to ``path``.

    Raises:
        OSError: If the path cannot be written.
    """
    out = Path(path)
    out.write_text(sweep_to_csv(rows))
    return out


def read_sweep_csv(path: str | Path) -> list[SweepRow]:
    """Parse a sweep CSV written by write_sweep_csv.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the header does not match the sweep columns.
    """
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
            raise ValueError(f"{path} is not a sweep CSV (header {reader.fieldnames})")
        return [SweepRow.model_validate(record) for record in reader]
