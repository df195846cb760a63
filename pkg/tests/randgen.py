"""Seeded random rulesets/packets for oracle and property tests.

Biased toward collisions: a 4-letter pattern alphabet (with mixed case), short
patterns, headers drawn from a handful of values, and packets that often
embed rule contents.
"""

from __future__ import annotations

import random

from layerids.packets import Packet
from layerids.rules import AddrMatch, ContentPattern, PortMatch, Rule, RuleSet

ALPHABET = b"abAB\x00\xff"
ADDRS = [0x0A000001, 0x0A000002, 0x0A0000FE, 0xC0A80101]
PORTS = [0, 21, 80, 8080, 40000]


def random_addr(rnd: random.Random) -> AddrMatch:
    x = rnd.random()
    if x < 0.6:
        return AddrMatch()
    a = rnd.choice(ADDRS)
    prefix = rnd.choice((8, 24, 32))
    mask = (0xFFFFFFFF << (32 - prefix)) & 0xFFFFFFFF
    return AddrMatch(a & mask, prefix)


def random_port(rnd: random.Random) -> PortMatch:
    x = rnd.random()
    if x < 0.5:
        return PortMatch()
    if x < 0.85:
        p = rnd.choice(PORTS)
        return PortMatch(p, p)
    lo = rnd.choice(PORTS)
    return PortMatch(lo, min(65535, lo + rnd.randint(0, 100)))


def random_pattern(rnd: random.Random) -> bytes:
    return bytes(rnd.choice(ALPHABET) for _ in range(rnd.randint(1, 4)))


def random_rule(rnd: random.Random, sid: int) -> Rule:
    proto = rnd.choice(("tcp", "udp", "icmp", "ip"))
    contents = tuple(ContentPattern(random_pattern(rnd), rnd.random() < 0.3)
                     for _ in range(rnd.choice((0, 1, 1, 2, 3))))
    return Rule(sid, proto, f"rule {sid}", random_addr(rnd), random_port(rnd),
                random_addr(rnd), random_port(rnd), contents)


def random_ruleset(rnd: random.Random, max_rules: int = 20) -> RuleSet:
    n = rnd.randint(0, max_rules)
    sids = rnd.sample(range(1, 10 * max_rules + 1), n)
    return RuleSet(tuple(random_rule(rnd, sid) for sid in sids), "random")


def random_packet(rnd: random.Random, rs: RuleSet | None = None, ts_us: int = 0,
                  max_payload: int = 256) -> Packet:
    proto = rnd.choice(("tcp", "udp", "icmp"))
    src, dst = rnd.choice(ADDRS), rnd.choice(ADDRS)
    sport, dport = (0, 0) if proto == "icmp" else (rnd.choice(PORTS), rnd.choice(PORTS))
    body = bytearray(rnd.choice(ALPHABET) for _ in range(rnd.randint(0, max_payload // 2)))
    if rs is not None and len(rs) and rnd.random() < 0.7:
        r = rnd.choice(rs.rules)
        for c in r.contents:
            data = c.data.swapcase() if c.nocase and rnd.random() < 0.5 else c.data
            at = rnd.randint(0, len(body))
            body[at:at] = data
        if rnd.random() < 0.5 and r.protocol != "ip":
            proto = r.protocol
            if proto == "icmp":
                sport = dport = 0
            else:
                sport = r.src_port.lo if not r.src_port.is_any else sport
                dport = r.dst_port.lo if not r.dst_port.is_any else dport
    return Packet(ts_us, proto, src, dst, sport, dport, bytes(body[:max_payload]))


def random_stream(rnd: random.Random, rs: RuleSet, n: int) -> list[Packet]:
    ts = 0
    out = []
    for _ in range(n):
        ts += rnd.randint(0, 50)
        out.append(random_packet(rnd, rs, ts))
    return out
