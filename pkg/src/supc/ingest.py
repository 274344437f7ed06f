"""Parsers for firewall (iptables-style) and IDS (Snort-style) rule files.

Both grammars are deliberately small.  Firewall lines are flag lists::

    -p tcp -s 192.168.1.0/24 -d 192.168.2.20 --dport 80 -j ACCEPT

IDS lines are Snort rule headers with an optional option block::

    alert tcp 192.168.1.0/24 any -> 192.168.2.0/28 443 (msg:"x"; sid:1;)

Malformed lines never abort a parse; they are reported as
:class:`ParseDiagnostic` entries and skipped.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import List, Tuple, Union

from .headerspace import (
    IpField,
    MacField,
    MatchSet,
    PortField,
    ProtoField,
)


class SfKind(enum.Enum):
    FIREWALL = "FIREWALL"
    IDS = "IDS"


class Action(enum.Enum):
    ALLOW = "ALLOW"
    DENY = "DENY"
    INSPECT = "INSPECT"


@dataclass(frozen=True)
class Origin:
    file: str
    line: int
    kind: SfKind
    raw: str = field(default="", compare=False)

    def __post_init__(self):
        if self.line < 1:
            raise ValueError(f"origin line must be >= 1, got {self.line}")


@dataclass(frozen=True)
class SfRule:
    kind: SfKind
    match: MatchSet
    action: Action
    origin: Origin

    def __post_init__(self):
        if self.kind is SfKind.IDS and not (self.match.l2s.is_wildcard and self.match.l2d.is_wildcard):
            raise ValueError("IDS rules cannot carry MAC match fields")


@dataclass(frozen=True)
class ParseDiagnostic:
    file: str
    line: int
    message: str

    def __str__(self):
        return f"{self.file}:{self.line}: {self.message}"


class RuleSyntaxError(ValueError):
    pass


FW_ACTIONS = {"ACCEPT": Action.ALLOW, "DROP": Action.DENY}
IDS_ACTIONS = {"pass": Action.ALLOW, "drop": Action.DENY, "alert": Action.INSPECT}

# flag -> (match field name, parser)
_FW_FLAGS = {
    "-p": ("proto", ProtoField.parse),
    "-s": ("l3s", IpField.parse),
    "-d": ("l3d", IpField.parse),
    "--sport": ("l4s", PortField.parse),
    "--dport": ("l4d", PortField.parse),
    "--mac-source": ("l2s", MacField.parse),
    "--mac-dest": ("l2d", MacField.parse),
}

_IDS_RE = re.compile(
    r"^(?P<action>\S+)\s+(?P<proto>\S+)\s+(?P<src>\S+)\s+(?P<sport>\S+)\s+"
    r"(?P<dir>\S+)\s+(?P<dst>\S+)\s+(?P<dport>\S+)\s*(?P<options>\(.*\))?\s*$"
)


def parse_firewall_line(line: str) -> Tuple[MatchSet, Action]:
    tokens = line.split()
    fields = {}
    action = None
    i = 0
    while i < len(tokens):
        flag = tokens[i]
        if i + 1 >= len(tokens):
            raise RuleSyntaxError(f"missing value for {flag}")
        value = tokens[i + 1]
        i += 2
        if flag == "-j":
            if action is not None:
                raise RuleSyntaxError("duplicate -j")
            if value not in FW_ACTIONS:
                raise RuleSyntaxError(f"unsupported target {value!r}")
            action = FW_ACTIONS[value]
            continue
        if flag not in _FW_FLAGS:
            raise RuleSyntaxError(f"unknown option {flag!r}")
        name, parse = _FW_FLAGS[flag]
        if name in fields:
            raise RuleSyntaxError(f"duplicate option {flag}")
        fields[name] = _field(parse, value)
    if action is None:
        raise RuleSyntaxError("missing -j target")
    return MatchSet(**fields), action


def parse_ids_line(line: str) -> Tuple[MatchSet, Action]:
    m = _IDS_RE.match(line)
    if m is None:
        raise RuleSyntaxError("malformed IDS rule header")
    if m["action"] not in IDS_ACTIONS:
        raise RuleSyntaxError(f"unsupported IDS action {m['action']!r}")
    if m["dir"] == "<>":
        raise RuleSyntaxError("bidirectional operator '<>' is not supported")
    if m["dir"] != "->":
        raise RuleSyntaxError(f"invalid direction operator {m['dir']!r}")

    def ids_value(text):
        return "*" if text == "any" else text

    match = MatchSet(
        proto=_field(ProtoField.parse, "*" if m["proto"] == "ip" else ids_value(m["proto"])),
        l3s=_field(IpField.parse, ids_value(m["src"])),
        l4s=_field(PortField.parse, ids_value(m["sport"])),
        l3d=_field(IpField.parse, ids_value(m["dst"])),
        l4d=_field(PortField.parse, ids_value(m["dport"])),
    )
    return match, IDS_ACTIONS[m["action"]]


def _field(parse, text):
    try:
        return parse(text)
    except ValueError as exc:
        raise RuleSyntaxError(str(exc)) from None


def _lines(text: Union[bytes, str]):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    for lineno, line in enumerate(text.split("\n"), start=1):
        yield lineno, line.rstrip("\r")


def _parse_file(text, name, kind, parse_line):
    rules: List[SfRule] = []
    diagnostics: List[ParseDiagnostic] = []
    for lineno, raw in _lines(text):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            match, action = parse_line(stripped)
        except RuleSyntaxError as exc:
            diagnostics.append(ParseDiagnostic(name, lineno, str(exc)))
            continue
        rules.append(SfRule(kind, match, action, Origin(name, lineno, kind, raw)))
    return rules, diagnostics


def parse_firewall_file(text: Union[bytes, str], name: str):
    """Parse a firewall rule file.

    Returns ``(rules, diagnostics)``.  ``bytes`` input must be UTF-8; a
    decoding failure raises :class:`UnicodeDecodeError` since no line of
    the file can be trusted after it.
    """
    return _parse_file(text, name, SfKind.FIREWALL, parse_firewall_line)


def parse_ids_file(text: Union[bytes, str], name: str):
    """Parse an IDS rule file; same contract as :func:`parse_firewall_file`."""
    return _parse_file(text, name, SfKind.IDS, parse_ids_line)


def render_firewall_line(match: MatchSet, action: Action) -> str:
    """Inverse of :func:`parse_firewall_line` (wildcard fields are omitted)."""
    target = {v: k for k, v in FW_ACTIONS.items()}.get(action)
    if target is None:
        raise ValueError(f"firewall rules cannot express {action.name}")
    parts = []
    for flag, (name, _) in _FW_FLAGS.items():
        value = getattr(match, name)
        if not value.is_wildcard:
            text = str(value)
            if name in ("l3s", "l3d") and text.endswith("/32"):
                text = text[:-3]
            parts += [flag, text]
    parts += ["-j", target]
    return " ".join(parts)


def render_ids_line(match: MatchSet, action: Action, options: str = "") -> str:
    if not (match.l2s.is_wildcard and match.l2d.is_wildcard):
        raise ValueError("IDS rules cannot carry MAC match fields")
    keyword = {v: k for k, v in IDS_ACTIONS.items()}[action]

    def any_(f):
        return "any" if f.is_wildcard else str(f)

    proto = "ip" if match.proto.is_wildcard else str(match.proto)
    head = f"{keyword} {proto} {any_(match.l3s)} {any_(match.l4s)} -> {any_(match.l3d)} {any_(match.l4d)}"
    return f"{head} ({options})" if options else head
