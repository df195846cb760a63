"""Seed-deterministic traffic and ruleset synthesis.

Attack packets are built by inverting a rule (header chosen to satisfy the
predicate, payload = the rule's contents joined by a single space). Benign
payloads use printable ASCII (0x20-0x7E) while synthetic rule patterns use
bytes 0x80-0xFF, so synthetic content rules can never fire on benign payloads.

Randomness is always drawn from ``random.Random`` instances keyed by
``(seed, index)`` so any packet can be regenerated on its own.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .matcher import CompiledMatcher
from .packets import Packet, PacketStream, ip_to_int
from .rules import AddrMatch, ContentPattern, PortMatch, Rule, RuleSet, ANY_ADDR, ANY_PORT

ANY_SRC_IP = ip_to_int("10.0.0.1")
ANY_DST_IP = ip_to_int("10.0.0.2")
ANY_SRC_PORT = 40000
ANY_DST_PORT = 80
FILLER = b" "

BENIGN_MIN_LEN = 64
BENIGN_MAX_LEN = 1400
BENIGN_RETRIES = 3

# printable ASCII for benign payloads; high half for synthetic patterns
_BENIGN_TABLE = bytes(0x20 + (b % 95) for b in range(256))
_PATTERN_TABLE = bytes(0x80 | b for b in range(256))

_COMMON_PORTS = (21, 22, 23, 25, 53, 69, 79, 80, 110, 111, 135, 137, 139, 143,
                 161, 443, 445, 1433, 3306, 8080)


def rng_for(seed: int, index: int = 0, rnd: random.Random | None = None) -> random.Random:
    """Counter-derived generator for item ``index`` under ``seed``.

    Passing ``rnd`` re-seeds that instance instead of allocating a new one.
    """
    key = (seed & 0xFFFFFFFFFFFFFFFF) << 64 | (index & 0xFFFFFFFFFFFFFFFF)
    if rnd is None:
        return random.Random(key)
    rnd.seed(key)
    return rnd


@dataclass(frozen=True)
class FloodSpec:
    rate_pps: float
    duration_us: int
    attack_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.rate_pps > 0:
            raise ValueError("rate_pps must be > 0")
        if self.duration_us < 0:
            raise ValueError("duration_us must be >= 0")
        if not 0.0 <= self.attack_fraction <= 1.0:
            raise ValueError("attack_fraction must be within [0, 1]")

    @property
    def n_packets(self) -> int:
        return int(self.rate_pps * self.duration_us // 1_000_000)


def _pick_addr(m: AddrMatch, default: int, seed: int) -> int:
    if m.is_any:
        return default
    host_bits = 32 - m.prefix
    if host_bits < 2:
        return m.net
    return m.net | (1 + seed % ((1 << host_bits) - 2))


def packet_from_rule(r: Rule, ts_us: int = 0, seed: int = 0) -> Packet:
    """Build a packet that satisfies ``r``'s header and carries all its contents."""
    proto = "tcp" if r.protocol == "ip" else r.protocol
    src = _pick_addr(r.src_addr, ANY_SRC_IP, seed)
    dst = _pick_addr(r.dst_addr, ANY_DST_IP, seed >> 16)
    if proto == "icmp":
        sport = dport = 0
    else:
        sport = ANY_SRC_PORT if r.src_port.is_any else r.src_port.lo
        dport = ANY_DST_PORT if r.dst_port.is_any else r.dst_port.lo
    payload = FILLER.join(c.data for c in r.contents)
    return Packet(ts_us, proto, src, dst, sport, dport, payload)


def _random_benign(ts_us: int, rnd: random.Random) -> Packet:
    proto = rnd.choice(("tcp", "tcp", "udp", "icmp"))
    src = rnd.getrandbits(32)
    dst = rnd.getrandbits(32)
    if proto == "icmp":
        sport = dport = 0
    else:
        sport = rnd.randint(1024, 65535)
        dport = rnd.randint(0, 65535)
    n = rnd.randint(BENIGN_MIN_LEN, BENIGN_MAX_LEN)
    payload = rnd.randbytes(n).translate(_BENIGN_TABLE)
    return Packet(ts_us, proto, src, dst, sport, dport, payload)


def generate_benign(ts_us: int, seed: int, rs: RuleSet | CompiledMatcher | None = None,
                    _rnd: random.Random | None = None) -> Packet:
    """Random clean packet; redrawn (up to 3 times) if it triggers a rule in ``rs``.

    If every draw matches, the last one is returned with an empty payload. Such a
    header-only packet can still trigger header-only rules.
    """
    matcher = CompiledMatcher(rs) if isinstance(rs, RuleSet) else rs
    p = _random_benign(ts_us, rng_for(seed, 0, _rnd))
    if matcher is None or len(matcher) == 0:
        return p
    for attempt in range(1, BENIGN_RETRIES + 1):
        if not matcher.match(p).sids:
            return p
        p = _random_benign(ts_us, rng_for(seed, attempt, _rnd))
    if not matcher.match(p).sids:
        return p
    return Packet(p.ts_us, p.protocol, p.src_ip, p.dst_ip, p.src_port, p.dst_port, b"")


def generate_flood(rs: RuleSet, spec: FloodSpec, label: str = "flood",
                   matcher: CompiledMatcher | None = None) -> PacketStream:
    """Uniformly spaced mix of rule-triggering and benign packets."""
    if spec.attack_fraction > 0 and len(rs) == 0:
        raise ValueError("attack traffic requested from an empty ruleset")
    if matcher is None:
        matcher = CompiledMatcher(rs)
    rules = rs.rules
    packets = []
    rnd = random.Random()
    scratch = random.Random()
    for i in range(spec.n_packets):
        ts = int(i * 1_000_000 // spec.rate_pps)
        rng_for(spec.seed, i, rnd)
        if rnd.random() < spec.attack_fraction:
            r = rules[rnd.randrange(len(rules))]
            packets.append(packet_from_rule(r, ts, rnd.getrandbits(32)))
        else:
            packets.append(generate_benign(ts, rnd.getrandbits(63), matcher, scratch))
    return PacketStream(tuple(packets), label)


def _random_net(rnd: random.Random) -> AddrMatch:
    prefix = rnd.choice((8, 16, 24, 32))
    base = rnd.choice((0x0A000000, 0xC0A80000, 0xAC100000))  # 10/8, 192.168/16, 172.16/12
    addr = base | rnd.getrandbits(16)
    mask = (0xFFFFFFFF << (32 - prefix)) & 0xFFFFFFFF
    return AddrMatch(addr & mask, prefix)


def _random_dport(rnd: random.Random) -> PortMatch:
    x = rnd.random()
    if x < 0.3:
        return ANY_PORT
    if x < 0.9:
        port = rnd.choice(_COMMON_PORTS)
        return PortMatch(port, port)
    lo = rnd.randint(1, 60000)
    return PortMatch(lo, lo + rnd.randint(1, 1000))


def generate_synthetic_ruleset(n: int, seed: int = 0, name: str = "synthetic") -> RuleSet:
    """``n`` content rules with sids 1..n and high-byte patterns.

    Patterns are drawn so that no pattern occurs inside another rule's pattern
    (tracked through 4-byte windows), which makes every rule's trigger packet
    fire that rule and no other synthetic content rule.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    grams: set[bytes] = set()
    heads: set[bytes] = set()
    rules = []
    for sid in range(1, n + 1):
        rnd = rng_for(seed, sid)
        proto = rnd.choices(("tcp", "udp", "icmp", "ip"), weights=(50, 25, 10, 15))[0]
        src = _random_net(rnd) if rnd.random() < 0.1 else ANY_ADDR
        dst = _random_net(rnd) if rnd.random() < 0.1 else ANY_ADDR
        sport = ANY_PORT
        dport = ANY_PORT
        if proto in ("tcp", "udp"):
            dport = _random_dport(rnd)
            if rnd.random() < 0.1:
                sport = PortMatch(1024, 65535)
        contents = []
        for _ in range(rnd.randint(1, 3)):
            while True:
                pat = rnd.randbytes(rnd.randint(4, 16)).translate(_PATTERN_TABLE)
                windows = {pat[i:i + 4] for i in range(len(pat) - 3)}
                if pat[:4] not in grams and not (windows & heads):
                    break
            grams |= windows
            heads.add(pat[:4])
            contents.append(ContentPattern(pat, rnd.random() < 0.2))
        msg = f"SYNTHETIC {proto.upper()} signature {sid}"
        rules.append(Rule(sid, proto, msg, src, sport, dst, dport, tuple(contents)))
    return RuleSet(tuple(rules), name)
