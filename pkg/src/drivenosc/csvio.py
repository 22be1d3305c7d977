"""Delimited output with a fixed numeric format.

Every float is written with 12 significant digits and LF line endings so CSV
bodies diff byte-identically across runs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["fmt", "write_csv"]


def fmt(value) -> str:
    """Format one cell: floats at 12 significant digits, ints plainly."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.11e}"
    return str(value)


def write_csv(path: Path | str, header: list[str], rows) -> int:
    """Write rows with the package numeric format; returns the row count."""
    path = Path(path)
    count = 0
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
            count += 1
    return count
