"""Run reports: per-layer stats CSV, scenario drop-ratio CSV and a parameter echo."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .engine import LayerConfig, LayerResult, LayerStats

STATS_COLUMNS = ("layer_id", "received", "analyzed", "dropped", "drop_pct")
RATIO_COLUMNS = ("baseline", "scenario", "baseline_drop_pct", "scenario_drop_pct", "ratio")


@dataclass
class ReportRow:
    scenario: str
    layer_id: str
    role: str
    stats: LayerStats


@dataclass
class RunReport:
    label: str
    rows: list[ReportRow]
    params: dict = field(default_factory=dict)

    @classmethod
    def build(cls, label: str, configs: Sequence[LayerConfig],
              results: Mapping[str, LayerResult], params: dict | None = None) -> RunReport:
        rows = [ReportRow(c.scenario, c.layer_id, c.role, results[c.layer_id].stats) for c in configs]
        return cls(label, rows, dict(params or {}))

    @property
    def scenarios(self) -> list[str]:
        return list(dict.fromkeys(r.scenario for r in self.rows))

    def scenario_drop_pct(self, scenario: str) -> float:
        """Drop percentage over the scenario's primary-role layers (all layers if none)."""
        rows = [r for r in self.rows if r.scenario == scenario]
        front = [r for r in rows if r.role == "primary"] or rows
        received = sum(r.stats.received for r in front)
        dropped = sum(r.stats.dropped for r in front)
        return 100.0 * dropped / received if received else 0.0

    def ratios(self) -> list[tuple[str, str, float, float, float]]:
        """drop_pct(first scenario) / drop_pct(other) for every other scenario."""
        names = self.scenarios
        if len(names) < 2:
            return []
        base = names[0]
        b = self.scenario_drop_pct(base)
        out = []
        for name in names[1:]:
            s = self.scenario_drop_pct(name)
            if s:
                ratio = b / s
            else:
                ratio = math.inf if b else math.nan
            out.append((base, name, b, s, ratio))
        return out

    def stats_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(STATS_COLUMNS)
        for r in self.rows:
            s = r.stats
            w.writerow((r.layer_id, s.received, s.analyzed, s.dropped, f"{s.drop_pct:.3f}"))
        return buf.getvalue()

    def ratio_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RATIO_COLUMNS)
        for base, name, b, s, ratio in self.ratios():
            w.writerow((base, name, f"{b:.3f}", f"{s:.3f}", f"{ratio:.2f}"))
        return buf.getvalue()

    def params_json(self) -> str:
        return json.dumps({"label": self.label, **self.params}, indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> list[Path]:
        """Write ``path`` (stats CSV) plus ``<stem>.ratio.csv`` and ``<stem>.params.json``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        ratio_path = path.with_name(path.stem + ".ratio.csv")
        params_path = path.with_name(path.stem + ".params.json")
        path.write_text(self.stats_csv(), encoding="utf-8", newline="\n")
        ratio_path.write_text(self.ratio_csv(), encoding="utf-8", newline="\n")
        params_path.write_text(self.params_json(), encoding="utf-8", newline="\n")
        return [path, ratio_path, params_path]

    def table(self) -> str:
        lines = [f"{self.label}",
                 f"{'scenario':<14} {'layer':<16} {'role':<14} {'received':>10} {'analyzed':>10} "
                 f"{'dropped':>10} {'drop%':>8}"]
        for r in self.rows:
            s = r.stats
            lines.append(f"{r.scenario:<14} {r.layer_id:<16} {r.role:<14} {s.received:>10} "
                         f"{s.analyzed:>10} {s.dropped:>10} {s.drop_pct:>8.3f}")
        for base, name, b, s, ratio in self.ratios():
            lines.append(f"drop ratio {base}/{name}: {b:.3f}% / {s:.3f}% = {ratio:.2f}x")
        return "\n".join(lines)
