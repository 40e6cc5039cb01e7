"""Result persistence: content-addressed run directories with JSON summaries."""

from __future__ import annotations

import datetime
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

__version__ = "0.1.0"

__all__ = ["ResultRecord", "run_id_for", "write_record"]


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_id_for(config: dict) -> str:
    """Stable 12-hex-digit content hash of a config mapping."""
    return hashlib.sha256(_canonical(config).encode()).hexdigest()[:12]


@dataclass
class ResultRecord:
    command: str
    config: dict
    payload: dict
    run_id: str = ""
    timestamp: str = ""
    version: str = __version__

    def __post_init__(self):
        if not self.run_id:
            self.run_id = run_id_for({"command": self.command, **self.config})
        if not self.timestamp:
            self.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()

    def summary(self) -> dict:
        return {
            "command": self.command,
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "version": self.version,
            "config": self.config,
            "payload": self.payload,
        }


def write_record(rec: ResultRecord, out_dir, extra_files: dict | None = None) -> Path:
    """Write <out>/<run-id>/{summary.json, config.echo} plus extra files.

    extra_files maps filename -> writer(path) callables (e.g. the sweep CSV
    emitter).  Returns the run directory.
    """
    root = Path(out_dir) / rec.run_id
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "summary.json", "w") as fh:
        json.dump(rec.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(root / "config.echo", "w") as fh:
        fh.write(_canonical({"command": rec.command, **rec.config}))
        fh.write("\n")
    for name, writer in (extra_files or {}).items():
        writer(root / name)
    return root
