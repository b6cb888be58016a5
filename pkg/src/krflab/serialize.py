"""Rational parsing, deterministic CSV/JSON emission, and run manifests.

Rationals travel as "p/q" strings end to end so the exact code paths are
never contaminated by floats; CSV floats are written with shortest
round-trip repr, which makes re-runs byte-identical.
"""

from __future__ import annotations

import csv
import datetime
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import __version__

SCHEMA_VERSION = 1


def parse_rational(text: str) -> Fraction:
    """Parse 'p/q' or 'p' (also accepts plain integers)."""
    return Fraction(str(text).strip())


def format_rational(x: Fraction) -> str:
    return str(Fraction(x))


def parse_class_coords(text: str) -> list[Fraction]:
    """Comma-separated rationals, e.g. '4,-1' or '7/2, 1/3'."""
    parts = [p for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty class coordinates")
    return [parse_rational(p) for p in parts]


def _cell(value) -> str:
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_json(path: Union[str, Path], payload: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def read_json(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())


def write_manifest(
    out_dir: Union[str, Path],
    command: str,
    config_path: Optional[str] = None,
    seed: Optional[int] = None,
    extra: Optional[dict] = None,
) -> dict:
    """Provenance record written next to every artifact a command emits."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": config_path,
        "output_dir": str(out_dir),
        "seed": seed,
        "tool_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    write_json(out_dir / "manifest.json", manifest)
    return manifest
