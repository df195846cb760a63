"""Rule matching: header prefilter plus Aho-Corasick multi-pattern payload search.

The automaton is built in Python (goto trie, BFS failure links) and flattened
into a dense DFA over byte equivalence classes so that the per-byte scan can
run as a small numba kernel. Patterns flagged ``nocase`` live in a second
automaton built from lower-cased pattern bytes and scanned over the lower-cased
payload (ASCII-only folding, same as ``bytes.lower``).

Rule confirmation is separate from search: the automaton only reports which
distinct patterns occurred; a rule fires when its header predicate accepts the
packet and every one of its patterns was reported.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numba
import numpy as np

from .packets import Packet
from .rules import Rule, RuleSet

_PROTO_CODE = {"ip": 0, "icmp": 1, "tcp": 6, "udp": 17}


@numba.njit(cache=True, nogil=True)
def _scan(table, classes, out_ptr, out_ids, data, n_patterns):
    seen = np.zeros(n_patterns, dtype=np.bool_)
    found = np.empty(n_patterns, dtype=np.int32)
    n = 0
    s = 0
    for i in range(data.shape[0]):
        s = table[s, classes[data[i]]]
        for k in range(out_ptr[s], out_ptr[s + 1]):
            pid = out_ids[k]
            if not seen[pid]:
                seen[pid] = True
                found[n] = pid
                n += 1
    return found[:n]


@numba.njit(cache=True, nogil=True)
def _header_count(hdr, proto, src, sport, dst, dport):
    # hdr columns: proto, src_net, src_mask, dst_net, dst_mask, sport_lo, sport_hi, dport_lo, dport_hi, uses_ports
    count = 0
    for i in range(hdr.shape[0]):
        rp = hdr[i, 0]
        if rp != 0 and rp != proto:
            continue
        if (src & hdr[i, 2]) != hdr[i, 1] or (dst & hdr[i, 4]) != hdr[i, 3]:
            continue
        if hdr[i, 9] != 0:
            if sport < hdr[i, 5] or sport > hdr[i, 6] or dport < hdr[i, 7] or dport > hdr[i, 8]:
                continue
        count += 1
    return count


class PatternAutomaton:
    """Aho-Corasick automaton over a list of distinct byte patterns.

    ``search(data)`` returns the ids (indices into ``patterns``) of every
    pattern occurring in ``data``, each reported once.
    """

    def __init__(self, patterns: list[bytes]) -> None:
        self.patterns = list(patterns)
        used = sorted({b for p in self.patterns for b in p})
        classes = np.zeros(256, dtype=np.int32)
        for k, b in enumerate(used, start=1):
            classes[b] = k
        n_classes = len(used) + 1

        # goto trie
        children: list[dict[int, int]] = [{}]
        own: list[list[int]] = [[]]
        for pid, pat in enumerate(self.patterns):
            s = 0
            for b in pat:
                c = classes[b]
                nxt = children[s].get(c)
                if nxt is None:
                    nxt = len(children)
                    children[s][c] = nxt
                    children.append({})
                    own.append([])
                s = nxt
            own[s].append(pid)

        n_states = len(children)
        table = np.zeros((n_states, n_classes), dtype=np.int32)
        fail = np.zeros(n_states, dtype=np.int32)
        outputs: list[list[int]] = [list(o) for o in own]
        for c, nxt in children[0].items():
            table[0, c] = nxt
        queue = deque(children[0].values())
        while queue:
            s = queue.popleft()
            f = fail[s]
            outputs[s].extend(outputs[f])
            table[s] = table[f]
            for c, nxt in children[s].items():
                fail[nxt] = table[f, c]
                table[s, c] = nxt
                queue.append(nxt)

        out_ptr = np.zeros(n_states + 1, dtype=np.int32)
        out_ptr[1:] = np.cumsum([len(o) for o in outputs])
        out_ids = np.fromiter((pid for o in outputs for pid in o), dtype=np.int32, count=int(out_ptr[-1]))
        self._table = table
        self._classes = classes
        self._out_ptr = out_ptr
        self._out_ids = out_ids
        self.n_states = n_states

    def search(self, data: bytes) -> np.ndarray:
        if not self.patterns or not data:
            return np.empty(0, dtype=np.int32)
        return _scan(self._table, self._classes, self._out_ptr, self._out_ids,
                     np.frombuffer(data, dtype=np.uint8), len(self.patterns))


@dataclass(frozen=True)
class MatchResult:
    sids: frozenset[int]

    def __contains__(self, sid: object) -> bool:
        return sid in self.sids

    def __len__(self) -> int:
        return len(self.sids)


def _header_matrix(rules: tuple[Rule, ...]) -> np.ndarray:
    hdr = np.zeros((len(rules), 10), dtype=np.int64)
    for i, r in enumerate(rules):
        hdr[i] = (_PROTO_CODE[r.protocol], r.src_addr.net, r.src_addr.mask,
                  r.dst_addr.net, r.dst_addr.mask, r.src_port.lo, r.src_port.hi,
                  r.dst_port.lo, r.dst_port.hi, int(r.uses_ports))
    return hdr


class CompiledMatcher:
    """Immutable compiled form of one RuleSet."""

    def __init__(self, ruleset: RuleSet) -> None:
        self.ruleset = ruleset
        rules = ruleset.rules
        self._rules = rules
        self._header = _header_matrix(rules)

        cs_ids: dict[bytes, int] = {}
        ci_ids: dict[bytes, int] = {}
        per_rule: list[tuple[int, ...]] = []
        for r in rules:
            ids = []
            for c in r.contents:
                if c.nocase:
                    ids.append(("ci", ci_ids.setdefault(c.data.lower(), len(ci_ids))))
                else:
                    ids.append(("cs", cs_ids.setdefault(c.data, len(cs_ids))))
            per_rule.append(ids)
        n_cs = len(cs_ids)
        # global pattern id: case-sensitive first, then nocase offset by n_cs
        self._rule_patterns = [frozenset(pid if kind == "cs" else n_cs + pid for kind, pid in ids)
                               for ids in per_rule]
        self._pattern_rules: list[list[int]] = [[] for _ in range(n_cs + len(ci_ids))]
        for i, pids in enumerate(self._rule_patterns):
            for pid in pids:
                self._pattern_rules[pid].append(i)
        self._header_only = tuple(i for i, pids in enumerate(self._rule_patterns) if not pids)
        self._n_cs = n_cs
        self._cs = PatternAutomaton(list(cs_ids))
        self._ci = PatternAutomaton(list(ci_ids))
        self.n_patterns = n_cs + len(ci_ids)

    def __len__(self) -> int:
        return len(self._rules)

    def header_count(self, p: Packet) -> int:
        """Number of rules whose header predicate accepts ``p``."""
        if not self._rules:
            return 0
        return int(_header_count(self._header, _PROTO_CODE[p.protocol], p.src_ip,
                                 p.src_port, p.dst_ip, p.dst_port))

    def patterns_seen(self, payload: bytes) -> set[int]:
        seen = set(self._cs.search(payload).tolist())
        if self._ci.patterns:
            n_cs = self._n_cs
            seen.update(n_cs + pid for pid in self._ci.search(payload.lower()).tolist())
        return seen

    def match(self, p: Packet) -> MatchResult:
        seen = self.patterns_seen(p.payload) if p.payload else set()
        candidates = set(self._header_only)
        for pid in seen:
            candidates.update(self._pattern_rules[pid])
        sids = set()
        for i in candidates:
            if self._rule_patterns[i] <= seen:
                r = self._rules[i]
                if r.accepts_header(p.protocol, p.src_ip, p.src_port, p.dst_ip, p.dst_port):
                    sids.add(r.sid)
        return MatchResult(frozenset(sids))


def compile(rs: RuleSet) -> CompiledMatcher:  # noqa: A001 - mirrors the public API name
    return CompiledMatcher(rs)


def match_packet(m: CompiledMatcher, p: Packet) -> MatchResult:
    return m.match(p)


def match_naive(rs: RuleSet, p: Packet) -> MatchResult:
    """Reference oracle: test every rule and every pattern directly."""
    proto_num = {"icmp": 1, "tcp": 6, "udp": 17}[p.protocol]
    folded = p.payload.lower()
    hits = set()
    for r in rs.rules:
        if r.protocol != "ip" and _PROTO_CODE[r.protocol] != proto_num:
            continue
        if r.src_addr.prefix and (p.src_ip >> (32 - r.src_addr.prefix)) != (r.src_addr.net >> (32 - r.src_addr.prefix)):
            continue
        if r.dst_addr.prefix and (p.dst_ip >> (32 - r.dst_addr.prefix)) != (r.dst_addr.net >> (32 - r.dst_addr.prefix)):
            continue
        if r.protocol in ("tcp", "udp"):
            if not (r.src_port.lo <= p.src_port <= r.src_port.hi):
                continue
            if not (r.dst_port.lo <= p.dst_port <= r.dst_port.hi):
                continue
        if all((c.data.lower() in folded) if c.nocase else (c.data in p.payload) for c in r.contents):
            hits.add(r.sid)
    return MatchResult(frozenset(hits))
