"""Training baseline: 33 signatures and how often each fired.

"ICMP Destination Unreachable Communication Administratively Prohibited" is a
single signature with 3 occurrences. The most frequent signature is counted
as 86006.

Baseline signature ``i`` (1-based, in the order below) is given sid ``i``
inside the benchmark master ruleset.
"""

from __future__ import annotations

from .alerts import Alert, AlertLog
from .packets import Packet, PacketStream
from .rules import ANY_PORT, Rule, RuleSet
from .trafficgen import generate_synthetic_ruleset, packet_from_rule

TRAINING_COUNTS: tuple[tuple[str, int], ...] = (
    ("(spp_frag2) TTL Limit Exceeded (reassemble) detection", 2),
    ("(portscan) UDP Portscan", 3),
    ("ICMP Destination Unreachable Communication Administratively Prohibited", 3),
    ("(spp_frag2) Teardrop attack", 4),
    ("MISC gopher proxy", 4),
    ("(portscan) TCP Portscan", 5),
    ("WEB-MISC Compaq Insight directory traversal", 11),
    ("DDOS tfn2k icmp possible communication", 14),
    ("ICMP Large ICMP Packet", 14),
    ("WEB-CGI search.cgi access", 17),
    ("WEB-MISC http directory traversal", 18),
    ("TELNET SGI telnetd format bug", 19),
    ("(http_inspect) DOUBLE DECODING ATTACK", 20),
    ("FINGER query", 21),
    ("BACKDOOR Q access", 26),
    ("BACKDOOR SIGNATURE - Q ICMP", 28),
    ("DDOS mstream client to handler", 29),
    ("BAD-TRAFFIC udp port 0 traffic", 35),
    ("SNMP request udp", 40),
    ("DOS arkiea backup", 48),
    ("(http_inspect) WEBROOT DIRECTORY TRAVERSAL", 49),
    ("BAD-TRAFFIC tcp port 0 traffic", 84),
    ("(http_inspect) OVERSIZE REQUEST-URI DIRECTORY", 96),
    ("NETBIOS RFPalyze Attempt", 105),
    ("(spp_rpc_decode) Incomplete RPC segment", 129),
    ("FTP command overflow attempt", 163),
    ("WEB-CGI Allaire Pro Web Shell attempt", 981),
    ("WEB-CGI Armada Style Master Index directory traversal", 998),
    ("WEB-IIS index server file source code attempt", 1525),
    ("BAD-TRAFFIC same SRC/DST", 1754),
    ("ICMP Echo Reply", 3409),
    ("BAD-TRAFFIC loopback traffic", 21886),
    ("(snort_decoder): Invalid UDP header, length field", 86006),
)

MASTER_SIZE = 3211
BASELINE_SIDS = tuple(range(1, len(TRAINING_COUNTS) + 1))
DEFAULT_SEED = 2010
FIXTURE_STEP_US = 10


def benchmark_master(n: int = MASTER_SIZE, seed: int = DEFAULT_SEED) -> RuleSet:
    """Synthetic master ruleset whose first 33 sids carry the baseline messages."""
    synth = generate_synthetic_ruleset(n, seed, name="master")
    rules = []
    for r in synth.rules:
        if r.sid <= len(TRAINING_COUNTS):
            msg = TRAINING_COUNTS[r.sid - 1][0]
            proto = "icmp" if "ICMP" in msg.upper() else r.protocol
            ports = (r.src_port, r.dst_port) if proto != "icmp" else (ANY_PORT, ANY_PORT)
            r = Rule(r.sid, proto, msg, r.src_addr, ports[0], r.dst_addr, ports[1], r.contents)
        rules.append(r)
    return RuleSet(tuple(rules), "master")


def baseline_alerts(layer_id: str = "train") -> list[Alert]:
    """Alert records reproducing the training counts, one row after another."""
    out = []
    ts = 0
    for sid, (_msg, count) in zip(BASELINE_SIDS, TRAINING_COUNTS):
        for _ in range(count):
            out.append(Alert(ts, sid, layer_id, "tcp", 0x0A000001, 40000, 0x0A000002, 80))
            ts += FIXTURE_STEP_US
    return out


def baseline_alert_log(layer_id: str = "train") -> AlertLog:
    return AlertLog(alerts=baseline_alerts(layer_id))


def baseline_stream(master: RuleSet) -> PacketStream:
    """Training traffic in which baseline sid ``i`` fires exactly its listed count."""
    packets: list[Packet] = []
    ts = 0
    for sid, (_msg, count) in zip(BASELINE_SIDS, TRAINING_COUNTS):
        template = packet_from_rule(master[sid], 0, sid)
        for _ in range(count):
            packets.append(Packet(ts, template.protocol, template.src_ip, template.dst_ip,
                                  template.src_port, template.dst_port, template.payload))
            ts += FIXTURE_STEP_US
    return PacketStream(tuple(packets), "baseline")
