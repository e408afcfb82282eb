"""Run manifests: provenance records for CLI commands.

Manifests capture how an output was produced (command line, config hash,
inputs, seed, version, wall time). They live under runs/ and are explicitly
excluded from byte-identity comparisons between reruns.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path


def config_hash(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class RunManifest:
    command: list
    config_digest: str
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    seed: int | None = None
    toolkit_version: str = ""
    started_utc: str = ""
    wall_time_s: float = 0.0
    _t0: float = field(default=0.0, repr=False)

    @classmethod
    def start(cls, command, config: dict | None = None, seed: int | None = None) -> "RunManifest":
        from . import __version__

        return cls(
            command=[str(c) for c in command],
            config_digest=config_hash(config or {}),
            seed=seed,
            toolkit_version=__version__,
            started_utc=datetime.now(timezone.utc).isoformat(),
            _t0=time.monotonic(),
        )

    def add_input(self, path) -> None:
        self.inputs.append(str(path))

    def add_output(self, path) -> None:
        self.outputs.append(str(path))

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config_digest": self.config_digest,
            "inputs": sorted(self.inputs),
            "outputs": sorted(self.outputs),
            "seed": self.seed,
            "toolkit_version": self.toolkit_version,
            "started_utc": self.started_utc,
            "wall_time_s": self.wall_time_s,
        }

    def finish(self, runs_dir, slug: str) -> Path:
        self.wall_time_s = time.monotonic() - self._t0
        runs_dir = Path(runs_dir)
        runs_dir.mkdir(parents=True, exist_ok=True)
        path = runs_dir / f"{slug}.json"
        path.write_text(json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n")
        return path
