"""CSV and summary writers. All numbers are written with 17 significant digits."""
from __future__ import annotations

import os
from typing import Iterable, Mapping

import numpy as np

from .functionals import DiagnosticsRecord
from .grid import Grid

__all__ = ["fmt", "write_diagnostics", "write_snapshot", "write_summary", "emit_outputs"]


def fmt(x) -> str:
    return "%.17g" % x


def _write(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def write_diagnostics(path, records: Iterable[DiagnosticsRecord]) -> None:
    _write(
        path,
        [DiagnosticsRecord.HEADER]
        + [",".join(fmt(v) for v in r.as_tuple()) for r in records],
    )


def write_snapshot(path, grid: Grid, u) -> None:
    u = grid.check(u)
    header = "x,u" if grid.dim == 1 else "x,y,u"
    rows = (
        ",".join(fmt(c) for c in xy) + "," + fmt(val) for xy, val in zip(grid.nodes, u)
    )
    _write(path, [header, *rows])


def write_table(path, header: str, columns) -> None:
    cols = [np.asarray(c) for c in columns]
    _write(path, [header] + [",".join(fmt(v) for v in row) for row in zip(*cols)])


def write_summary(path, scalars: Mapping, config_text: str = "") -> None:
    lines = []
    for key, value in scalars.items():
        if isinstance(value, (float, np.floating)):
            value = fmt(value)
        lines.append(f"{key} = {value}")
    if config_text:
        lines += ["", "# effective config", config_text.rstrip("\n")]
    _write(path, lines)


def emit_outputs(records, snapshots, directory, grid: Grid = None,
                 summary: Mapping = None, config_text: str = "") -> None:
    """Write ``diagnostics.csv``, ``u_<step>.csv`` per snapshot and ``summary.txt``.

    ``snapshots`` is a sequence of ``(step_index, field)`` pairs.
    """
    os.makedirs(directory, exist_ok=True)
    write_diagnostics(os.path.join(directory, "diagnostics.csv"), records)
    for step, u in snapshots:
        write_snapshot(os.path.join(directory, f"u_{step}.csv"), grid, u)
    if summary is not None or config_text:
        write_summary(os.path.join(directory, "summary.txt"), summary or {}, config_text)
