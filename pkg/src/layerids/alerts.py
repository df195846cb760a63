"""Append-only alert log with per-signature frequency / last-seen queries.

On disk the log is JSON Lines, one record per line with exactly the keys
``ts_us, sid, layer, proto, src, sport, dst, dport``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .packets import Packet, int_to_ip, ip_to_int

RECORD_KEYS = ("ts_us", "sid", "layer", "proto", "src", "sport", "dst", "dport")


class CorruptRecordError(ValueError):
    def __init__(self, record_no: int, reason: str) -> None:
        self.record_no = record_no
        super().__init__(f"alert record {record_no}: {reason}")


@dataclass(frozen=True, slots=True)
class Alert:
    ts_us: int
    sid: int
    layer_id: str
    protocol: str
    src_ip: int
    src_port: int
    dst_ip: int
    dst_port: int

    def __post_init__(self) -> None:
        if self.sid < 1:
            raise ValueError(f"alert sid must be >= 1, got {self.sid}")
        if self.ts_us < 0:
            raise ValueError("alert ts_us must be non-negative")

    @classmethod
    def from_packet(cls, p: Packet, sid: int, layer_id: str) -> Alert:
        return cls(p.ts_us, sid, layer_id, p.protocol, p.src_ip, p.src_port, p.dst_ip, p.dst_port)

    def to_json(self) -> str:
        rec = {
            "ts_us": self.ts_us, "sid": self.sid, "layer": self.layer_id, "proto": self.protocol,
            "src": int_to_ip(self.src_ip), "sport": self.src_port,
            "dst": int_to_ip(self.dst_ip), "dport": self.dst_port,
        }
        return json.dumps(rec, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str, record_no: int = 0, strict: bool = True) -> Alert:
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptRecordError(record_no, f"invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict):
            raise CorruptRecordError(record_no, "not an object")
        missing = [k for k in RECORD_KEYS if k not in rec]
        if missing:
            raise CorruptRecordError(record_no, f"missing keys {missing}")
        extra = set(rec) - set(RECORD_KEYS)
        if extra and strict:
            raise CorruptRecordError(record_no, f"unknown keys {sorted(extra)}")
        try:
            for k in ("ts_us", "sid", "sport", "dport"):
                if type(rec[k]) is not int:
                    raise ValueError(f"{k} must be an integer")
            return cls(rec["ts_us"], rec["sid"], str(rec["layer"]), str(rec["proto"]),
                       ip_to_int(rec["src"]), rec["sport"], ip_to_int(rec["dst"]), rec["dport"])
        except ValueError as exc:
            raise CorruptRecordError(record_no, str(exc)) from None


@dataclass(frozen=True, slots=True)
class SignatureStats:
    sid: int
    freq: int
    ltime: int


def stats(alerts: Iterable[Alert]) -> dict[int, SignatureStats]:
    """Fold alerts into sid -> (occurrence count, last detection time)."""
    freq: dict[int, int] = {}
    last: dict[int, int] = {}
    for a in alerts:
        freq[a.sid] = freq.get(a.sid, 0) + 1
        if a.ts_us > last.get(a.sid, -1):
            last[a.sid] = a.ts_us
    return {sid: SignatureStats(sid, n, last[sid]) for sid, n in freq.items()}


def read_alerts(lines: Iterable[str], strict: bool = True) -> tuple[list[Alert], int]:
    """Parse JSONL alert records. Lenient mode skips corrupt records and counts them."""
    out: list[Alert] = []
    skipped = 0
    for n, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            out.append(Alert.from_json(line, n, strict))
        except CorruptRecordError:
            if strict:
                raise
            skipped += 1
    return out, skipped


class AlertLog:
    """Single-writer append-only alert log, optionally mirrored to a file.

    Keeps running per-sid stats so that the sync agent can re-partition
    without rescanning the whole log.
    """

    def __init__(self, path: str | Path | None = None, alerts: Iterable[Alert] = ()) -> None:
        self._alerts: list[Alert] = []
        self._freq: dict[int, int] = {}
        self._last: dict[int, int] = {}
        self.path = Path(path) if path is not None else None
        self._fh = None
        if self.path is not None:
            self._fh = open(self.path, "a", encoding="utf-8", newline="\n")
        for a in alerts:
            self.append(a)

    @classmethod
    def load(cls, path: str | Path, strict: bool = True) -> tuple[AlertLog, int]:
        with open(path, encoding="utf-8") as fh:
            alerts, skipped = read_alerts(fh, strict)
        return cls(alerts=alerts), skipped

    def append(self, a: Alert) -> None:
        if not isinstance(a, Alert):
            raise TypeError("only Alert records can be appended")
        if self._fh is not None:
            self._fh.write(a.to_json() + "\n")
            self._fh.flush()
        self._alerts.append(a)
        self._freq[a.sid] = self._freq.get(a.sid, 0) + 1
        if a.ts_us > self._last.get(a.sid, -1):
            self._last[a.sid] = a.ts_us

    def extend(self, alerts: Iterable[Alert]) -> None:
        for a in alerts:
            self.append(a)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> AlertLog:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        return len(self._alerts)

    def __iter__(self) -> Iterator[Alert]:
        return iter(list(self._alerts))

    def stats(self) -> dict[int, SignatureStats]:
        return {sid: SignatureStats(sid, n, self._last[sid]) for sid, n in self._freq.items()}

    def dumps(self) -> str:
        return "".join(a.to_json() + "\n" for a in self._alerts)


def write_alerts(alerts: Iterable[Alert], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in alerts:
            fh.write(a.to_json() + "\n")
