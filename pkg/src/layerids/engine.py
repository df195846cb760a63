"""Multi-layer detection pipeline simulated in virtual time.

Every layer taps the full packet stream. A layer is a single FIFO server with
room for ``queue_capacity`` packets (the one in service included): an arriving
packet that finds the layer full is dropped and never matched. Service time is
``packet_cost / service_rate`` virtual seconds. Matching happens when a packet
is admitted, against the ruleset epoch in force at that moment, so a ruleset
swap never splits a packet across two epochs.
"""

from __future__ import annotations

import math
import sys
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .alerts import Alert, AlertLog
from .matcher import CompiledMatcher, MatchResult
from .packets import Packet
from .rules import RuleSet

COST_MODES = ("per_rule_scan", "automaton")
ROLES = ("primary", "complementary")
UNBOUNDED_CAPACITY = sys.maxsize


class StaleEpochError(ValueError):
    pass


@dataclass(frozen=True)
class CostParams:
    mode: str = "per_rule_scan"
    alpha: float = 100.0
    beta: float = 1.0
    gamma: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in COST_MODES:
            raise ValueError(f"unknown cost mode {self.mode!r}")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError("cost coefficients must be >= 0")


@dataclass(frozen=True)
class LayerConfig:
    layer_id: str
    role: str
    ruleset: RuleSet
    service_rate: float = math.inf  # cost units per virtual second
    queue_capacity: int = UNBOUNDED_CAPACITY
    cost: CostParams = field(default_factory=CostParams)
    scenario: str = "default"

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown layer role {self.role!r}")
        if not self.service_rate > 0:
            raise ValueError("service_rate must be > 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")


@dataclass
class LayerStats:
    received: int = 0
    analyzed: int = 0
    dropped: int = 0

    @classmethod
    def from_counts(cls, received: int, dropped: int) -> LayerStats:
        return cls(received, received - dropped, dropped)

    def __post_init__(self) -> None:
        if min(self.received, self.analyzed, self.dropped) < 0:
            raise ValueError("counters must be non-negative")
        if self.received != self.analyzed + self.dropped:
            raise ValueError("received must equal analyzed + dropped")

    @property
    def drop_pct(self) -> float:
        return 100.0 * self.dropped / self.received if self.received else 0.0


def cost_of(p: Packet, matcher: CompiledMatcher, cost: CostParams) -> float:
    n = len(p.payload)
    if cost.mode == "per_rule_scan":
        return cost.alpha + cost.beta * n * matcher.header_count(p) if n else cost.alpha
    return cost.alpha + cost.beta * n + cost.gamma * n * math.log2(1 + matcher.n_patterns)


@dataclass
class LayerResult:
    layer_id: str
    stats: LayerStats
    alerts: list[Alert]
    epochs: list[int]  # ruleset epoch each alert was produced under


class Layer:
    """Runtime state of one detection node."""

    def __init__(self, config: LayerConfig, epoch: int = 0) -> None:
        self.config = config
        self.layer_id = config.layer_id
        self.role = config.role
        self.ruleset = config.ruleset
        self.matcher = CompiledMatcher(config.ruleset)
        self.epoch = epoch
        self.stats = LayerStats()
        self.alerts: list[Alert] = []
        self.alert_epochs: list[int] = []
        self._in_system: deque[float] = deque()
        self._busy_until = 0.0
        self._us_per_unit = 0.0 if math.isinf(config.service_rate) else 1e6 / config.service_rate

    def cost(self, p: Packet) -> float:
        return cost_of(p, self.matcher, self.config.cost)

    def swap(self, ruleset: RuleSet, epoch: int) -> None:
        if epoch <= self.epoch:
            raise StaleEpochError(f"layer {self.layer_id}: epoch {epoch} <= current {self.epoch}")
        if set(ruleset.rules) != set(self.ruleset.rules):
            self.matcher = CompiledMatcher(ruleset)
        self.ruleset = ruleset
        self.epoch = epoch

    def offer(self, p: Packet) -> MatchResult | None:
        """Present one packet; returns its match result, or None if dropped."""
        t = float(p.ts_us)
        q = self._in_system
        while q and q[0] <= t:
            q.popleft()
        self.stats.received += 1
        if len(q) >= self.config.queue_capacity:
            self.stats.dropped += 1
            return None
        self.stats.analyzed += 1
        if self._us_per_unit:
            start = t if t > self._busy_until else self._busy_until
            self._busy_until = start + self.cost(p) * self._us_per_unit
            q.append(self._busy_until)
        return self.matcher.match(p)

    def result(self) -> LayerResult:
        return LayerResult(self.layer_id, LayerStats(self.stats.received, self.stats.analyzed,
                                                     self.stats.dropped),
                           list(self.alerts), list(self.alert_epochs))


class LayeredEngine:
    """A set of layers fed by a copy-to-all tap."""

    def __init__(self, configs: Sequence[LayerConfig], alert_log: AlertLog | None = None) -> None:
        if not configs:
            raise ValueError("at least one layer is required")
        self.layers: dict[str, Layer] = {}
        for c in configs:
            if c.layer_id in self.layers:
                raise ValueError(f"duplicate layer id {c.layer_id!r}")
            self.layers[c.layer_id] = Layer(c)
        self.alert_log = alert_log
        self._last_ts = -1

    def layer(self, layer_id: str) -> Layer:
        try:
            return self.layers[layer_id]
        except KeyError:
            raise KeyError(f"unknown layer {layer_id!r}") from None

    def layer_ids(self, role: str | None = None) -> list[str]:
        return [lid for lid, l in self.layers.items() if role is None or l.role == role]

    def swap_ruleset(self, layer_id: str, new: RuleSet, epoch: int) -> int:
        """Atomically replace a layer's ruleset; returns the epoch now in force."""
        layer = self.layer(layer_id)
        layer.swap(new, epoch)
        return layer.epoch

    def process(self, p: Packet) -> None:
        if p.ts_us < self._last_ts:
            raise ValueError(f"unordered stream: ts {p.ts_us} after {self._last_ts}")
        self._last_ts = p.ts_us
        for layer in self.layers.values():
            res = layer.offer(p)
            if res is None or not res.sids:
                continue
            for sid in sorted(res.sids):
                a = Alert.from_packet(p, sid, layer.layer_id)
                layer.alerts.append(a)
                layer.alert_epochs.append(layer.epoch)
                if self.alert_log is not None:
                    self.alert_log.append(a)

    def run(self, stream: Iterable[Packet], agent=None) -> dict[str, LayerResult]:
        """Feed a time-ordered stream; ``agent.tick(ts)`` runs before each packet."""
        for p in stream:
            if agent is not None:
                agent.tick(p.ts_us)
            self.process(p)
        return self.results()

    def results(self) -> dict[str, LayerResult]:
        return {lid: layer.result() for lid, layer in self.layers.items()}


def packet_cost(p: Packet, layer: Layer) -> float:
    return layer.cost(p)


def run(stream: Iterable[Packet], layers: Sequence[LayerConfig],
        alert_log: AlertLog | None = None, agent=None) -> dict[str, LayerResult]:
    return LayeredEngine(layers, alert_log).run(stream, agent)
