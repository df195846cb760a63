"""Select the frequent-signature set for the small databases.

A signature is a candidate when it fired at least ``min_freq`` times and was
last seen at or after ``valid_time``. Candidates are admitted most-frequent
first (ties by ascending sid) until ``max_num`` signatures are admitted; every
other signature of the master set stays in the complementary database.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .alerts import SignatureStats
from .rules import RuleSet, split, write_ruleset

log = logging.getLogger(__name__)

DEFAULT_PRIMARY_NAME = "signature.rule"
DEFAULT_COMPLEMENT_NAME = "complement.rule"


class Sentinel(enum.Enum):
    INCLUDE_ALL = "include-all"
    UNBOUNDED = "unbounded"

    def __repr__(self) -> str:
        return self.name


INCLUDE_ALL = Sentinel.INCLUDE_ALL
UNBOUNDED = Sentinel.UNBOUNDED


@dataclass(frozen=True)
class PartitionParams:
    min_freq: int = 1
    valid_time: int | Sentinel = INCLUDE_ALL
    max_num: int | Sentinel = UNBOUNDED

    def __post_init__(self) -> None:
        if self.min_freq < 0:
            raise ValueError("min_freq must be >= 0")
        if self.valid_time is not INCLUDE_ALL and not isinstance(self.valid_time, int):
            raise ValueError("valid_time must be an integer or INCLUDE_ALL")
        if self.max_num is not UNBOUNDED and (not isinstance(self.max_num, int) or self.max_num < 1):
            raise ValueError("max_num must be a positive integer or UNBOUNDED")

    def admits(self, st: SignatureStats) -> bool:
        if st.freq < self.min_freq:
            return False
        return self.valid_time is INCLUDE_ALL or st.ltime >= self.valid_time


@dataclass(frozen=True)
class Partition:
    primary_sids: tuple[int, ...]
    complementary_sids: tuple[int, ...]
    ignored: int = 0  # sids present in stats but unknown to the master set


def partition(master: RuleSet, st: Mapping[int, SignatureStats], params: PartitionParams) -> Partition:
    known = master.sids
    ignored = sum(1 for sid in st if sid not in known)
    if ignored:
        log.warning("%d sids in alert stats are not in the master ruleset; ignored", ignored)
    candidates = [s for sid, s in st.items() if sid in known and params.admits(s)]
    candidates.sort(key=lambda s: (-s.freq, s.sid))
    if params.max_num is not UNBOUNDED:
        candidates = candidates[:params.max_num]
    primary = tuple(s.sid for s in candidates)
    chosen = set(primary)
    rest = tuple(sorted(sid for sid in known if sid not in chosen))
    return Partition(primary, rest, ignored)


def apply_partition(master: RuleSet, part: Partition, out_dir: str | Path | None = None,
                    primary_name: str = DEFAULT_PRIMARY_NAME,
                    complement_name: str = DEFAULT_COMPLEMENT_NAME) -> tuple[RuleSet, RuleSet]:
    """Split ``master`` along ``part``; write both rule files when ``out_dir`` is given."""
    primary, complement = split(master, part.primary_sids)
    primary = RuleSet(primary.rules, Path(primary_name).stem)
    complement = RuleSet(complement.rules, Path(complement_name).stem)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_ruleset(primary, out / primary_name)
        write_ruleset(complement, out / complement_name)
    return primary, complement
