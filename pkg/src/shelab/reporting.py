"""Machine-readable experiment reports.

Tables are CSV with shortest-round-trip float formatting, so a rerun with
the same configuration and seed reproduces them byte for byte regardless of
worker count.  The JSON manifest echoes every resolved configuration value
and carries the verdicts; wall time lives only in the manifest, never in a
table.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from . import __version__


def fmt(value) -> str:
    """Deterministic cell formatting: shortest round-trip for floats."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Verdict:
    claim: str
    description: str
    threshold: str
    measured: str
    passed: bool


@dataclass
class ExperimentReport:
    name: str
    manifest: dict
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)

    def add_table(self, name: str, header: list[str], rows: list[list]) -> None:
        self.tables[name] = (header, rows)

    def add_verdict(
        self, claim: str, description: str, threshold, measured, passed: bool
    ) -> None:
        self.verdicts.append(
            Verdict(
                claim=claim,
                description=description,
                threshold=fmt(threshold),
                measured=fmt(measured),
                passed=bool(passed),
            )
        )

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def write(self, out_dir: str, wall_time: float | None = None) -> None:
        os.makedirs(out_dir, exist_ok=True)
        for name, (header, rows) in self.tables.items():
            path = os.path.join(out_dir, f"{self.name}_{name}.csv")
            with open(path, "w", newline="") as fh:
                fh.write(",".join(header) + "\n")
                for row in rows:
                    fh.write(",".join(fmt(c) for c in row) + "\n")
        vpath = os.path.join(out_dir, f"{self.name}_verdicts.csv")
        with open(vpath, "w", newline="") as fh:
            fh.write("claim,description,threshold,measured,pass\n")
            for v in self.verdicts:
                fh.write(
                    ",".join(
                        [
                            v.claim,
                            '"' + v.description.replace('"', "'") + '"',
                            v.threshold,
                            v.measured,
                            "pass" if v.passed else "FAIL",
                        ]
                    )
                    + "\n"
                )
        manifest = {
            "experiment": self.name,
            "artifact_version": __version__,
            "config": self.manifest,
            "verdicts": [
                {
                    "claim": v.claim,
                    "description": v.description,
                    "threshold": v.threshold,
                    "measured": v.measured,
                    "pass": v.passed,
                }
                for v in self.verdicts
            ],
            "all_pass": self.passed,
        }
        if wall_time is not None:
            manifest["wall_time_seconds"] = round(wall_time, 3)
        with open(os.path.join(out_dir, f"{self.name}_manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def summary_lines(self) -> list[str]:
        lines = []
        for v in self.verdicts:
            status = "PASS" if v.passed else "FAIL"
            lines.append(
                f"[{status}] {v.claim}: {v.description} "
                f"(threshold {v.threshold}, measured {v.measured})"
            )
        return lines
