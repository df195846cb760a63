"""Packet model and classic (microsecond) pcap reading/writing.

Only Ethernet II / IPv4 / {TCP, UDP, ICMP} frames are decoded. Anything else
(IPv6, fragments, bad IPv4 checksum, truncated frames) is skipped and counted.
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

PROTO_NUMBERS = {"icmp": 1, "tcp": 6, "udp": 17}
PROTO_NAMES = {v: k for k, v in PROTO_NUMBERS.items()}

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_SWAPPED = 0xD4C3B2A1
LINKTYPE_ETHERNET = 1
SNAPLEN = 65535

_SRC_MAC = bytes.fromhex("020000000001")
_DST_MAC = bytes.fromhex("020000000002")
_ETH_HDR = _DST_MAC + _SRC_MAC + b"\x08\x00"
_TRANSPORT_LEN = {"tcp": 20, "udp": 8, "icmp": 8}


class PcapError(ValueError):
    """Fatal pcap structure error (bad magic, truncated headers)."""


def ip_to_int(addr: str) -> int:
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(addr: int) -> str:
    return str(ipaddress.IPv4Address(addr))


@dataclass(frozen=True, slots=True)
class Packet:
    ts_us: int
    protocol: str
    src_ip: int
    dst_ip: int
    src_port: int = 0
    dst_port: int = 0
    payload: bytes = b""

    def __post_init__(self) -> None:
        if self.ts_us < 0:
            raise ValueError("ts_us must be non-negative")
        if self.protocol not in PROTO_NUMBERS:
            raise ValueError(f"unsupported packet protocol {self.protocol!r}")
        if len(self.payload) > 65535:
            raise ValueError("payload longer than 65535 bytes")


@dataclass(frozen=True)
class PacketStream:
    packets: tuple[Packet, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        pkts = tuple(self.packets)
        object.__setattr__(self, "packets", pkts)
        for a, b in zip(pkts, pkts[1:]):
            if b.ts_us < a.ts_us:
                raise ValueError(f"stream not time-ordered at ts {b.ts_us} < {a.ts_us}")

    def __len__(self) -> int:
        return len(self.packets)

    def __iter__(self):
        return iter(self.packets)

    def __getitem__(self, i):
        return self.packets[i]


def _ipv4_checksum(header: bytes) -> int:
    total = 0
    for (word,) in struct.iter_unpack("!H", header):
        total += word
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _frame(p: Packet) -> bytes:
    if p.protocol == "tcp":
        # seq/ack zero, data offset 5, PSH|ACK, window 65535, checksum left zero
        transport = struct.pack("!HHIIBBHHH", p.src_port, p.dst_port, 0, 0, 5 << 4, 0x18, 0xFFFF, 0, 0)
    elif p.protocol == "udp":
        transport = struct.pack("!HHHH", p.src_port, p.dst_port, 8 + len(p.payload), 0)
    else:
        transport = struct.pack("!BBHI", 8, 0, 0, 0)
    total_len = 20 + len(transport) + len(p.payload)
    if total_len > 65535:
        raise ValueError(f"payload of {len(p.payload)} bytes does not fit in one IPv4 datagram")
    ip = struct.pack("!BBHHHBBHII", 0x45, 0, total_len, 0, 0, 64,
                     PROTO_NUMBERS[p.protocol], 0, p.src_ip, p.dst_ip)
    ip = ip[:10] + struct.pack("!H", _ipv4_checksum(ip)) + ip[12:]
    return _ETH_HDR + ip + transport + p.payload


def write_pcap(stream: Iterable[Packet], byteorder: str = "<") -> bytes:
    """Serialize packets as a pcap v2.4 file (little-endian unless ``byteorder='>'``)."""
    out = [struct.pack(byteorder + "IHHiIII", PCAP_MAGIC, 2, 4, 0, 0, SNAPLEN, LINKTYPE_ETHERNET)]
    rec = struct.Struct(byteorder + "IIII")
    for p in stream:
        frame = _frame(p)
        sec, usec = divmod(p.ts_us, 1_000_000)
        out.append(rec.pack(sec, usec, len(frame), len(frame)))
        out.append(frame)
    return b"".join(out)


def decode_frame(frame: bytes, ts_us: int) -> Packet | None:
    """Decode one Ethernet frame, or return None if it is not supported/valid."""
    if len(frame) < 14 + 20 or frame[12:14] != b"\x08\x00":
        return None
    ver_ihl = frame[14]
    if ver_ihl >> 4 != 4:
        return None
    ihl = (ver_ihl & 0x0F) * 4
    if ihl < 20 or len(frame) < 14 + ihl:
        return None
    ip = frame[14:14 + ihl]
    if _ipv4_checksum(ip) != 0:
        return None
    total_len, frag = struct.unpack_from("!H2xH", ip, 2)
    if frag & 0x3FFF:  # MF flag or nonzero offset
        return None
    if total_len < ihl or len(frame) < 14 + total_len:
        return None
    proto = PROTO_NAMES.get(ip[9])
    if proto is None:
        return None
    src_ip, dst_ip = struct.unpack_from("!II", ip, 12)
    seg = frame[14 + ihl:14 + total_len]
    if proto == "tcp":
        if len(seg) < 20:
            return None
        sport, dport = struct.unpack_from("!HH", seg)
        off = (seg[12] >> 4) * 4
        if off < 20 or off > len(seg):
            return None
        payload = seg[off:]
    elif proto == "udp":
        if len(seg) < 8:
            return None
        sport, dport, ulen = struct.unpack_from("!HHH", seg)
        if ulen < 8 or ulen > len(seg):
            return None
        payload = seg[8:ulen]
    else:
        if len(seg) < 8:
            return None
        sport = dport = 0
        payload = seg[8:]
    return Packet(ts_us, proto, src_ip, dst_ip, sport, dport, bytes(payload))


def read_pcap(data: bytes, label: str = "") -> tuple[PacketStream, int]:
    """Parse a pcap file image. Returns the decoded stream and the skipped-frame count."""
    if len(data) < 4:
        raise PcapError("truncated global header")
    (magic,) = struct.unpack_from("<I", data)
    if magic == PCAP_MAGIC:
        bo = "<"
    elif magic == PCAP_MAGIC_SWAPPED:
        bo = ">"
    else:
        raise PcapError(f"bad magic 0x{magic:08x}")
    if len(data) < 24:
        raise PcapError("truncated global header")
    _, _, _, _, _, _, linktype = struct.unpack_from(bo + "IHHiIII", data)
    if linktype != LINKTYPE_ETHERNET:
        raise PcapError(f"unsupported link type {linktype}")

    rec = struct.Struct(bo + "IIII")
    packets: list[Packet] = []
    skipped = 0
    pos = 24
    n = len(data)
    while pos < n:
        if pos + 16 > n:
            raise PcapError(f"truncated record header at offset {pos}")
        sec, usec, incl, _orig = rec.unpack_from(data, pos)
        pos += 16
        frame = data[pos:pos + incl]
        pos += incl
        pkt = decode_frame(frame, sec * 1_000_000 + usec) if len(frame) == incl else None
        if pkt is None:
            skipped += 1
        else:
            packets.append(pkt)
    packets.sort(key=lambda p: p.ts_us)  # stable; pcap order kept on ties
    return PacketStream(tuple(packets), label), skipped


def read_pcap_file(path, label: str | None = None) -> tuple[PacketStream, int]:
    with open(path, "rb") as fh:
        return read_pcap(fh.read(), label if label is not None else str(path))


def write_pcap_file(stream: Sequence[Packet] | PacketStream, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pcap(stream))
