"""Rule model, parser and canonical emitter for a small Snort-like rule subset.

Grammar (one rule per line, ``#`` starts a comment line)::

    alert <proto> <addr> <port> -> <addr> <port> ( msg:"<text>"; [content:"<pat>"; [nocase;]]* sid:<n>; )

``<addr>`` is ``any``, a dotted IPv4 address or ``a.b.c.d/prefix``; ``<port>`` is
``any``, an integer or an inclusive ``lo:hi`` range. Content strings accept the
escapes ``\\"``, ``\\\\``, ``\\;``, ``\\|`` and pipe-delimited hex bytes
(``|41 42|``) mixed with literal text.
"""

from __future__ import annotations

import ipaddress
from pathlib import Path
from dataclasses import dataclass, field
from typing import Iterable

PROTOCOLS = ("tcp", "udp", "icmp", "ip")
MAX_CONTENT_LEN = 2048


class RuleParseError(ValueError):
    """Raised for malformed rule text. Carries the 1-based line number."""

    def __init__(self, lineno: int, token: str, reason: str) -> None:
        self.lineno = lineno
        self.token = token
        self.reason = reason
        super().__init__(f"line {lineno}: {reason} (at {token!r})")


@dataclass(frozen=True, slots=True)
class AddrMatch:
    """IPv4 network predicate; prefix 0 is ``any``."""

    net: int = 0
    prefix: int = 0

    @property
    def mask(self) -> int:
        return (0xFFFFFFFF << (32 - self.prefix)) & 0xFFFFFFFF if self.prefix else 0

    @property
    def is_any(self) -> bool:
        return self.prefix == 0

    def accepts(self, addr: int) -> bool:
        return (addr & self.mask) == self.net

    def __str__(self) -> str:
        if self.prefix == 0:
            return "any"
        dotted = str(ipaddress.IPv4Address(self.net))
        return dotted if self.prefix == 32 else f"{dotted}/{self.prefix}"


@dataclass(frozen=True, slots=True)
class PortMatch:
    """Inclusive port range; (0, 65535) is ``any``."""

    lo: int = 0
    hi: int = 65535

    def __post_init__(self) -> None:
        if not (0 <= self.lo <= self.hi <= 65535):
            raise ValueError(f"invalid port range {self.lo}:{self.hi}")

    @property
    def is_any(self) -> bool:
        return self.lo == 0 and self.hi == 65535

    def accepts(self, port: int) -> bool:
        return self.lo <= port <= self.hi

    def __str__(self) -> str:
        if self.is_any:
            return "any"
        return str(self.lo) if self.lo == self.hi else f"{self.lo}:{self.hi}"


ANY_ADDR = AddrMatch()
ANY_PORT = PortMatch()


@dataclass(frozen=True, slots=True)
class ContentPattern:
    data: bytes
    nocase: bool = False

    def __post_init__(self) -> None:
        if not self.data:
            raise ValueError("content pattern must be non-empty")
        if len(self.data) > MAX_CONTENT_LEN:
            raise ValueError(f"content pattern longer than {MAX_CONTENT_LEN} bytes")


@dataclass(frozen=True, slots=True)
class Rule:
    sid: int
    protocol: str
    message: str
    src_addr: AddrMatch = ANY_ADDR
    src_port: PortMatch = ANY_PORT
    dst_addr: AddrMatch = ANY_ADDR
    dst_port: PortMatch = ANY_PORT
    contents: tuple[ContentPattern, ...] = ()
    action: str = "alert"

    def __post_init__(self) -> None:
        if self.sid < 1:
            raise ValueError(f"sid must be >= 1, got {self.sid}")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unsupported protocol {self.protocol!r}")
        if self.action != "alert":
            raise ValueError(f"unsupported action {self.action!r}")

    @property
    def uses_ports(self) -> bool:
        return self.protocol in ("tcp", "udp")

    def accepts_header(self, protocol: str, src_ip: int, src_port: int,
                       dst_ip: int, dst_port: int) -> bool:
        if self.protocol != "ip" and self.protocol != protocol:
            return False
        if not (self.src_addr.accepts(src_ip) and self.dst_addr.accepts(dst_ip)):
            return False
        if self.uses_ports:
            return self.src_port.accepts(src_port) and self.dst_port.accepts(dst_port)
        return True


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[Rule, ...] = ()
    name: str = ""
    _by_sid: dict[int, Rule] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        rules = tuple(self.rules)
        object.__setattr__(self, "rules", rules)
        by_sid: dict[int, Rule] = {}
        for r in rules:
            if r.sid in by_sid:
                raise ValueError(f"duplicate sid {r.sid}")
            by_sid[r.sid] = r
        object.__setattr__(self, "_by_sid", by_sid)

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __contains__(self, sid: object) -> bool:
        return sid in self._by_sid

    def __getitem__(self, sid: int) -> Rule:
        return self._by_sid[sid]

    @property
    def sids(self) -> frozenset[int]:
        return frozenset(self._by_sid)

    def sorted(self) -> RuleSet:
        return RuleSet(tuple(sorted(self.rules, key=lambda r: r.sid)), self.name)

    def with_rules(self, rules: Iterable[Rule], name: str | None = None) -> RuleSet:
        return RuleSet(tuple(rules), self.name if name is None else name)


# --------------------------------------------------------------------- parsing

_ESCAPABLE = {'"', "\\", ";", "|"}


def _parse_addr(tok: str, lineno: int) -> AddrMatch:
    if tok == "any":
        return ANY_ADDR
    try:
        net = ipaddress.IPv4Network(tok, strict=False)
    except ValueError:
        raise RuleParseError(lineno, tok, "bad address") from None
    return AddrMatch(int(net.network_address), net.prefixlen)


def _parse_int(tok: str, lineno: int, what: str) -> int:
    if not tok.isdigit():
        raise RuleParseError(lineno, tok, f"bad {what}")
    return int(tok)


def _parse_port(tok: str, lineno: int) -> PortMatch:
    if tok == "any":
        return ANY_PORT
    lo_s, sep, hi_s = tok.partition(":")
    lo = _parse_int(lo_s, lineno, "port")
    hi = _parse_int(hi_s, lineno, "port") if sep else lo
    if lo > 65535 or hi > 65535:
        raise RuleParseError(lineno, tok, "port out of range")
    if lo > hi:
        raise RuleParseError(lineno, tok, "port range lo > hi")
    return PortMatch(lo, hi)


def _decode_content(raw: str, lineno: int) -> bytes:
    out = bytearray()
    i = 0
    n = len(raw)
    while i < n:
        ch = raw[i]
        if ch == "\\":
            if i + 1 >= n or raw[i + 1] not in _ESCAPABLE:
                raise RuleParseError(lineno, raw[i:i + 2], "invalid escape")
            out += raw[i + 1].encode()
            i += 2
        elif ch == "|":
            end = raw.find("|", i + 1)
            if end < 0:
                raise RuleParseError(lineno, raw[i:], "unterminated hex block")
            digits = raw[i + 1:end].split()
            for d in digits:
                if len(d) != 2:
                    raise RuleParseError(lineno, d, "bad hex byte")
                try:
                    out.append(int(d, 16))
                except ValueError:
                    raise RuleParseError(lineno, d, "bad hex byte") from None
            i = end + 1
        else:
            out += ch.encode("utf-8")
            i += 1
    return bytes(out)


def _decode_text(raw: str, lineno: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch == "\\":
            if i + 1 >= len(raw) or raw[i + 1] not in _ESCAPABLE:
                raise RuleParseError(lineno, raw[i:i + 2], "invalid escape")
            out.append(raw[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _split_options(body: str, lineno: int) -> list[tuple[str, str | None, bool]]:
    """Split ``key:value; key;`` into (key, value, value_was_quoted)."""
    opts = []
    i = 0
    n = len(body)
    while i < n:
        while i < n and body[i].isspace():
            i += 1
        if i >= n:
            break
        start = i
        while i < n and body[i] not in ":;":
            if body[i] in "\"()":
                raise RuleParseError(lineno, body[start:i + 1], "unexpected character in option name")
            i += 1
        key = body[start:i].strip()
        if not key:
            raise RuleParseError(lineno, body[start:start + 10], "empty option name")
        if i >= n:
            raise RuleParseError(lineno, key, "option not terminated by ';'")
        if body[i] == ";":
            opts.append((key, None, False))
            i += 1
            continue
        i += 1  # ':'
        while i < n and body[i].isspace():
            i += 1
        if i < n and body[i] == '"':
            j = i + 1
            while j < n and body[j] != '"':
                j += 2 if body[j] == "\\" else 1
            if j >= n:
                raise RuleParseError(lineno, body[i:], "unbalanced quotes")
            value = body[i + 1:j]
            i = j + 1
            while i < n and body[i].isspace():
                i += 1
            if i >= n or body[i] != ";":
                raise RuleParseError(lineno, key, "option not terminated by ';'")
            opts.append((key, value, True))
            i += 1
        else:
            j = body.find(";", i)
            if j < 0:
                raise RuleParseError(lineno, body[i:], "option not terminated by ';'")
            value = body[i:j].strip()
            if '"' in value:
                raise RuleParseError(lineno, value, "unbalanced quotes")
            opts.append((key, value, False))
            i = j + 1
    return opts


def parse_rule(line: str, lineno: int = 1) -> Rule:
    """Parse a single rule line."""
    open_at = line.find("(")
    if open_at < 0:
        raise RuleParseError(lineno, line.strip()[:40], "missing '('")
    close_at = line.rfind(")")
    if close_at < open_at:
        raise RuleParseError(lineno, line[open_at:open_at + 40], "unbalanced parentheses")
    if line[close_at + 1:].strip():
        raise RuleParseError(lineno, line[close_at + 1:].strip(), "trailing text after ')'")
    body = line[open_at + 1:close_at]
    # quotes must balance before we trust the ')' we found
    unescaped = body.replace("\\\\", "").replace('\\"', "")
    if unescaped.count('"') % 2:
        raise RuleParseError(lineno, body[:40], "unbalanced quotes")

    head = line[:open_at].split()
    if len(head) != 7:
        raise RuleParseError(lineno, " ".join(head), "expected 'alert <proto> <addr> <port> -> <addr> <port>'")
    action, proto, src, sport, arrow, dst, dport = head
    if action != "alert":
        raise RuleParseError(lineno, action, "unsupported action")
    if proto not in PROTOCOLS:
        raise RuleParseError(lineno, proto, "unsupported protocol")
    if arrow != "->":
        raise RuleParseError(lineno, arrow, "expected '->'")

    msg: str | None = None
    sid: int | None = None
    contents: list[ContentPattern] = []
    last_was_content = False
    for key, value, quoted in _split_options(body, lineno):
        if key == "msg":
            if msg is not None or not quoted:
                raise RuleParseError(lineno, key, "duplicate or unquoted msg")
            msg = _decode_text(value or "", lineno)
            last_was_content = False
        elif key == "content":
            if not quoted:
                raise RuleParseError(lineno, value or key, "content must be quoted")
            data = _decode_content(value or "", lineno)
            if not data:
                raise RuleParseError(lineno, f'content:"{value}"', "empty content string")
            if len(data) > MAX_CONTENT_LEN:
                raise RuleParseError(lineno, key, "content longer than 2048 bytes")
            contents.append(ContentPattern(data))
            last_was_content = True
        elif key == "nocase":
            if value is not None or not last_was_content:
                raise RuleParseError(lineno, key, "nocase must directly follow a content option")
            contents[-1] = ContentPattern(contents[-1].data, True)
            last_was_content = False
        elif key == "sid":
            if sid is not None or value is None or quoted:
                raise RuleParseError(lineno, value or key, "duplicate or malformed sid")
            sid = _parse_int(value, lineno, "sid")
            if sid < 1:
                raise RuleParseError(lineno, value, "sid must be >= 1")
            last_was_content = False
        else:
            raise RuleParseError(lineno, key, "unsupported option")
    if msg is None:
        raise RuleParseError(lineno, body[:40], "missing msg")
    if sid is None:
        raise RuleParseError(lineno, body[:40], "missing sid")

    return Rule(
        sid=sid,
        protocol=proto,
        message=msg,
        src_addr=_parse_addr(src, lineno),
        src_port=_parse_port(sport, lineno),
        dst_addr=_parse_addr(dst, lineno),
        dst_port=_parse_port(dport, lineno),
        contents=tuple(contents),
    )


def parse_ruleset(text: str, name: str = "") -> RuleSet:
    rules: list[Rule] = []
    seen: set[int] = set()
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rule = parse_rule(stripped, lineno)
        if rule.sid in seen:
            raise RuleParseError(lineno, f"sid:{rule.sid}", "duplicate sid")
        seen.add(rule.sid)
        rules.append(rule)
    return RuleSet(tuple(rules), name)


# --------------------------------------------------------------------- emission

def _encode_content(data: bytes) -> str:
    parts: list[str] = []
    hex_run: list[str] = []
    for b in data:
        if 0x20 <= b <= 0x7E:
            if hex_run:
                parts.append("|" + " ".join(hex_run) + "|")
                hex_run = []
            ch = chr(b)
            parts.append("\\" + ch if ch in _ESCAPABLE else ch)
        else:
            hex_run.append(f"{b:02X}")
    if hex_run:
        parts.append("|" + " ".join(hex_run) + "|")
    return "".join(parts)


def _encode_text(text: str) -> str:
    return "".join("\\" + ch if ch in _ESCAPABLE else ch for ch in text)


def emit_rule(rule: Rule) -> str:
    opts = [f'msg:"{_encode_text(rule.message)}";']
    for c in rule.contents:
        opts.append(f'content:"{_encode_content(c.data)}";')
        if c.nocase:
            opts.append("nocase;")
    opts.append(f"sid:{rule.sid};")
    return (f"{rule.action} {rule.protocol} {rule.src_addr} {rule.src_port} -> "
            f"{rule.dst_addr} {rule.dst_port} ({' '.join(opts)})")


def emit_ruleset(rs: RuleSet) -> str:
    """Canonical text: a header comment, then rules in ascending sid order."""
    lines = [f"# ruleset {rs.name or '-'}: {len(rs)} rules"]
    lines.extend(emit_rule(r) for r in sorted(rs.rules, key=lambda r: r.sid))
    return "\n".join(lines) + "\n"


def split(master: RuleSet, primary_sids: Iterable[int]) -> tuple[RuleSet, RuleSet]:
    """Partition ``master`` into (rules in primary_sids, the rest), keeping order."""
    wanted = set(primary_sids)
    unknown = wanted - master.sids
    if unknown:
        raise KeyError(f"sids not in master: {sorted(unknown)[:10]}")
    primary = tuple(r for r in master.rules if r.sid in wanted)
    rest = tuple(r for r in master.rules if r.sid not in wanted)
    return RuleSet(primary, "primary"), RuleSet(rest, "complementary")


def read_ruleset(path, name: str | None = None) -> RuleSet:
    p = Path(path)
    return parse_ruleset(p.read_text(encoding="utf-8"), name if name is not None else p.stem)


def write_ruleset(rs: RuleSet, path) -> None:
    Path(path).write_text(emit_ruleset(rs), encoding="utf-8", newline="\n")
