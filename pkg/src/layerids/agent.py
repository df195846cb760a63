"""Rule-delta messages and the periodic sync agent that applies them.

An update "agent" is an epoch-stamped delta (full rule bodies to add, sids to
remove) addressed to one layer. The :class:`SyncAgent` re-partitions the
master ruleset from current alert statistics every ``interval_us`` of virtual
time and pushes one delta per layer, then swaps each layer's ruleset.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .alerts import AlertLog
from .engine import LayeredEngine, StaleEpochError
from .partitioner import PartitionParams, partition
from .rules import Rule, RuleSet, emit_rule, parse_rule

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RuleDelta:
    target_layer: str
    epoch: int
    add: tuple[Rule, ...] = ()
    remove: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if {r.sid for r in self.add} & set(self.remove):
            raise ValueError("a sid cannot be both added and removed")

    @property
    def is_empty(self) -> bool:
        return not self.add and not self.remove

    def to_json(self) -> str:
        return json.dumps({
            "target_layer": self.target_layer,
            "epoch": self.epoch,
            "add": [emit_rule(r) for r in self.add],
            "remove": list(self.remove),
        }, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> RuleDelta:
        rec = json.loads(text)
        return cls(str(rec["target_layer"]), int(rec["epoch"]),
                   tuple(parse_rule(line) for line in rec["add"]),
                   tuple(int(s) for s in rec["remove"]))


@dataclass(frozen=True)
class SyncSchedule:
    interval_us: int

    def __post_init__(self) -> None:
        if self.interval_us < 1:
            raise ValueError("interval_us must be >= 1")


def compute_delta(desired: RuleSet, current: RuleSet, layer: str, epoch: int) -> RuleDelta:
    """Delta turning ``current`` into ``desired``.

    A rule whose body changed under the same sid is re-sent in ``add``.
    """
    cur = {r.sid: r for r in current.rules}
    add = tuple(r for r in sorted(desired.rules, key=lambda r: r.sid) if cur.get(r.sid) != r)
    want = desired.sids
    remove = tuple(sorted(sid for sid in cur if sid not in want))
    return RuleDelta(layer, epoch, add, remove)


def apply_delta(current: RuleSet, d: RuleDelta, last_epoch: int | None = None) -> RuleSet:
    """Return ``(current - remove) + add`` in ascending sid order.

    Rules in ``add`` replace same-sid rules.

    Raises StaleEpochError when ``d.epoch`` is not newer than ``last_epoch``.
    """
    if last_epoch is not None and d.epoch <= last_epoch:
        raise StaleEpochError(f"delta epoch {d.epoch} <= last applied {last_epoch} for {d.target_layer}")
    unknown = set(d.remove) - current.sids
    if unknown:
        log.warning("delta for %s removes unknown sids %s", d.target_layer, sorted(unknown))
    drop = set(d.remove)
    merged = {r.sid: r for r in current.rules if r.sid not in drop}
    merged.update((r.sid, r) for r in d.add)
    return RuleSet(tuple(merged[sid] for sid in sorted(merged)), current.name)


class SyncAgent:
    """Single logical actor keeping every layer's ruleset in line with the partition."""

    def __init__(self, engine: LayeredEngine, master: RuleSet, alert_log: AlertLog,
                 params: PartitionParams, schedule: SyncSchedule,
                 journal: str | Path | None = None, start_us: int = 0) -> None:
        if not engine.layers:
            raise ValueError("at least one layer must be registered")
        self.engine = engine
        self.master = master
        self.alert_log = alert_log
        self.params = params
        self.schedule = schedule
        self.journal_path = Path(journal) if journal is not None else None
        self.journal: list[RuleDelta] = []
        self.next_due = start_us + schedule.interval_us
        self._epoch = {lid: engine.layer(lid).epoch for lid in engine.layers}

    def add_master_rule(self, rule: Rule) -> None:
        self.master = RuleSet(self.master.rules + (rule,), self.master.name)

    def remove_master_rule(self, sid: int) -> None:
        self.master = RuleSet(tuple(r for r in self.master.rules if r.sid != sid), self.master.name)

    def desired_sets(self) -> dict[str, RuleSet]:
        part = partition(self.master, self.alert_log.stats(), self.params)
        primary_sids = set(part.primary_sids)
        primary = RuleSet(tuple(r for r in self.master.rules if r.sid in primary_sids), "primary")
        complement = RuleSet(tuple(r for r in self.master.rules if r.sid not in primary_sids), "complementary")
        return {lid: primary if layer.role == "primary" else complement
                for lid, layer in self.engine.layers.items()}

    def run_sync_cycle(self, now: int | None = None) -> list[RuleDelta]:
        """Recompute the partition and push one delta to each layer."""
        applied = []
        for lid, desired in self.desired_sets().items():
            layer = self.engine.layer(lid)
            delta = compute_delta(desired, layer.ruleset, lid, self._epoch[lid] + 1)
            self.deliver(delta)
            applied.append(delta)
        return applied

    def deliver(self, delta: RuleDelta) -> bool:
        """Apply a (possibly replayed or reordered) delta. Returns False if stale."""
        lid = delta.target_layer
        layer = self.engine.layer(lid)
        try:
            new = apply_delta(layer.ruleset, delta, self._epoch[lid])
        except StaleEpochError:
            log.info("ignoring stale delta epoch %d for %s", delta.epoch, lid)
            return False
        self.engine.swap_ruleset(lid, new, delta.epoch)
        self._epoch[lid] = delta.epoch
        self.journal.append(delta)
        if self.journal_path is not None:
            with open(self.journal_path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(delta.to_json() + "\n")
        return True

    def tick(self, now: int) -> list[RuleDelta]:
        """Run every cycle that has come due at or before ``now``."""
        applied = []
        while self.next_due <= now:
            applied.extend(self.run_sync_cycle(self.next_due))
            self.next_due += self.schedule.interval_us
        return applied


def read_journal(path: str | Path) -> list[RuleDelta]:
    with open(path, encoding="utf-8") as fh:
        return [RuleDelta.from_json(line) for line in fh if line.strip()]
