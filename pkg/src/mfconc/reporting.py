"""CSV and manifest writers shared by the command line tools.

CSV bodies carry no timestamps or run metadata so that identical runs give
byte-identical files; all of that goes into ``manifest.json``.
"""
from __future__ import annotations

import csv
import json
import platform
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CSV_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1


def format_cell(value) -> str:
    """CSV cell: reals with 17 significant digits, booleans lowercase."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    return path


def csv_body(path) -> str:
    """File contents without the header line, for reproducibility comparisons."""
    return Path(path).read_text().split("\n", 1)[1]


def write_manifest(output_dir, subcommand: str, config: dict, seed, files: Sequence[str],
                   schema_versions: dict = None, extra: dict = None) -> Path:
    from . import __version__

    schema_versions = schema_versions or {}
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "package_version": __version__,
        "subcommand": subcommand,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": seed,
        "config": config,
        "files": [{"name": f, "schema_version": schema_versions.get(f, CSV_SCHEMA_VERSION)} for f in files],
    }
    if extra:
        doc.update(extra)
    path = Path(output_dir) / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, default=str) + "\n")
    return path
