"""CSV and JSON result files with a provenance header."""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import numpy as np


@dataclass(frozen=True)
class Provenance:
    """Identifies the run that produced an artifact."""

    version: str
    config_hash: str
    seed: int
    grid: int
    timestamp: Optional[str] = None

    @classmethod
    def create(
        cls, version: str, config_hash: str, seed: int, grid: int, stamp: bool = False
    ) -> "Provenance":
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if stamp else None
        return cls(version=version, config_hash=config_hash, seed=seed, grid=grid, timestamp=timestamp)

    def header_lines(self) -> list[str]:
        lines = [f"# peclet-lab {self.version} config={self.config_hash} seed={self.seed} grid={self.grid}"]
        if self.timestamp is not None:
            lines.append(f"# timestamp={self.timestamp}")
        return lines

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "version": self.version,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "grid": self.grid,
        }
        if self.timestamp is not None:
            data["timestamp"] = self.timestamp
        return data


def jsonable(value: Any) -> Any:
    """Plain JSON data: numpy scalars unwrapped, non-finite floats as null."""
    if isinstance(value, Mapping):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(item) for item in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        return number if math.isfinite(number) else None
    return value


class ArtifactWriter:
    """Writes every output of a run into one directory."""

    def __init__(self, out_dir: Path, provenance: Provenance) -> None:
        self.out_dir = Path(out_dir)
        self.provenance = provenance
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    def write_csv(
        self,
        name: str,
        rows: Iterable[Mapping[str, Any]],
        fieldnames: Optional[Sequence[str]] = None,
    ) -> Path:
        """Rows in order; the column set defaults to the first row's keys."""
        rows = list(rows)
        columns = list(fieldnames or (rows[0].keys() if rows else []))
        path = self._path(name)
        with open(path, "w", newline="") as f:
            for line in self.provenance.header_lines():
                f.write(line + "\n")
            writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: _cell(row.get(key)) for key in columns})
        self.written.append(path)
        return path

    def write_json(self, name: str, data: Mapping[str, Any]) -> Path:
        path = self._path(name)
        payload = {"provenance": self.provenance.to_dict(), **jsonable(data)}
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        self.written.append(path)
        return path


def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def read_csv(path: Path) -> list[dict[str, str]]:
    """Rows of a written CSV, skipping the provenance comment lines."""
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))
