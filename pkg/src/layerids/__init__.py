"""Multi-layer signature-based intrusion detection with frequency-driven rule partitioning."""

__version__ = "0.1.0"

from .alerts import Alert, AlertLog, SignatureStats, stats
from .engine import CostParams, LayerConfig, LayeredEngine, LayerStats
from .matcher import CompiledMatcher, MatchResult, match_naive, match_packet
from .packets import Packet, PacketStream, read_pcap, write_pcap
from .partitioner import INCLUDE_ALL, UNBOUNDED, Partition, PartitionParams, apply_partition, partition
from .rules import ContentPattern, Rule, RuleSet, emit_ruleset, parse_ruleset, split

__all__ = [
    "Alert", "AlertLog", "SignatureStats", "stats",
    "CostParams", "LayerConfig", "LayeredEngine", "LayerStats",
    "CompiledMatcher", "MatchResult", "match_naive", "match_packet",
    "Packet", "PacketStream", "read_pcap", "write_pcap",
    "INCLUDE_ALL", "UNBOUNDED", "Partition", "PartitionParams", "apply_partition", "partition",
    "ContentPattern", "Rule", "RuleSet", "emit_ruleset", "parse_ruleset", "split",
]
