"""Synthetic rule corpora and the compose/check timing harness."""

from __future__ import annotations

import random
import time
from dataclasses import asdict, dataclass
from typing import List, Tuple

from .composer import compose
from .conflict import check_all
from .headerspace import IpField, MacField, MatchSet, PortField, Proto, ProtoField
from .ingest import (
    Action,
    Origin,
    SfKind,
    SfRule,
    render_firewall_line,
    render_ids_line,
)

FW_FILE = "gen-fw.rules"
IDS_FILE = "gen-ids.rules"

_PORTS = (None, None, 22, 53, 80, 443, 8080)
_PROTOS = (Proto.TCP, Proto.TCP, Proto.UDP, Proto.ICMP, None)


@dataclass(frozen=True)
class GenSpec:
    total_rules: int
    distinct_patterns: int
    fw_fraction: float = 0.5
    seed: int = 0
    overlap: float = 0.0

    def __post_init__(self):
        if self.total_rules < 1 or self.distinct_patterns < 1:
            raise ValueError("total_rules and distinct_patterns must be positive")
        if self.distinct_patterns > self.total_rules:
            raise ValueError(
                f"infeasible spec: {self.distinct_patterns} distinct patterns > {self.total_rules} rules"
            )
        if not 0.0 <= self.fw_fraction <= 1.0:
            raise ValueError("fw_fraction must be in [0, 1]")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError("overlap must be in [0, 1]")


@dataclass(frozen=True)
class BenchResult:
    input_rule_count: int
    composed_rule_count: int
    compose_duration: float  # ms
    check_duration: float  # ms
    conflicts: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _src_net(k: int) -> IpField:
    # one private /24 per pattern: 10.x.y.0/24
    return IpField((10 << 24) | ((k & 0xFFFF) << 8), 24)


def _patterns(spec: GenSpec, rng: random.Random) -> List[Tuple[SfKind, MatchSet, Action]]:
    n_fw = round(spec.fw_fraction * spec.distinct_patterns)
    seen = set()
    out = []
    k = 0
    misses = 0
    while len(out) < spec.distinct_patterns:
        kind = SfKind.FIREWALL if len(out) < n_fw else SfKind.IDS
        src = _src_net(k)
        dst = IpField((192 << 24) | (168 << 16) | (rng.randrange(256) << 8), 24)
        proto = rng.choice(_PROTOS)
        if out and misses < 32 and rng.random() < spec.overlap:
            # derive from an earlier pattern: nest inside it, chain after it,
            # or answer it in the reverse direction
            _, other, _ = out[rng.randrange(len(out))]
            proto = other.proto.value
            mode = rng.randrange(3)
            if mode == 0:
                src, dst = IpField(other.l3s.network | rng.randrange(256), 32), other.l3d
            elif mode == 1:
                src = other.l3d
            else:
                src, dst = other.l3d, other.l3s
        ported = proto in (Proto.TCP, Proto.UDP)
        match = MatchSet(
            l3s=src,
            l3d=dst,
            l4s=PortField(rng.choice(_PORTS) if ported and rng.random() < 0.2 else None),
            l4d=PortField(rng.choice(_PORTS) if ported else None),
            proto=ProtoField(proto),
        )
        if kind is SfKind.FIREWALL:
            if rng.random() < 0.1:
                match = MatchSet(
                    MacField(rng.randrange(1 << 48) & ~(1 << 40)), match.l2d,
                    match.l3s, match.l3d, match.l4s, match.l4d, match.proto,
                )
            action = rng.choice((Action.ALLOW, Action.DENY))
        else:
            action = rng.choice((Action.INSPECT, Action.INSPECT, Action.ALLOW, Action.DENY))
        k += 1
        if (match, action) in seen:
            misses += 1
            continue
        misses = 0
        seen.add((match, action))
        out.append((kind, match, action))
    return out


def generate(spec: GenSpec) -> List[SfRule]:
    """Deterministic corpus with exactly ``spec.distinct_patterns`` patterns.

    Every pattern occurs at least once and the remaining slots are filled
    uniformly at random.  Firewall rules come first (as they would from the
    firewall file), then IDS rules; origins point at the line each rule
    occupies in the file :func:`render_corpus` writes.
    """
    rng = random.Random(spec.seed)
    patterns = _patterns(spec, rng)
    picks = list(range(len(patterns)))
    picks += [rng.randrange(len(patterns)) for _ in range(spec.total_rules - len(patterns))]
    rng.shuffle(picks)

    rules = []
    lines = {SfKind.FIREWALL: 0, SfKind.IDS: 0}
    for kind in (SfKind.FIREWALL, SfKind.IDS):
        for p in picks:
            pkind, match, action = patterns[p]
            if pkind is not kind:
                continue
            lines[kind] += 1
            if kind is SfKind.FIREWALL:
                raw, name = render_firewall_line(match, action), FW_FILE
            else:
                raw, name = render_ids_line(match, action, f'msg:"pattern {p}"; sid:{1000000 + p};'), IDS_FILE
            rules.append(SfRule(kind, match, action, Origin(name, lines[kind], kind, raw)))
    return rules


def render_corpus(rules: List[SfRule]) -> Tuple[str, str]:
    """Firewall and IDS file contents for a generated corpus."""
    fw = [r.origin.raw for r in rules if r.kind is SfKind.FIREWALL]
    ids = [r.origin.raw for r in rules if r.kind is SfKind.IDS]
    return "".join(line + "\n" for line in fw), "".join(line + "\n" for line in ids)


def run_bench(spec: GenSpec, workers: int = 1) -> BenchResult:
    rules = generate(spec)
    t0 = time.perf_counter()
    table = compose(rules)
    t1 = time.perf_counter()
    report = check_all(table, workers=workers)
    t2 = time.perf_counter()
    return BenchResult(
        input_rule_count=len(rules),
        composed_rule_count=len(table),
        compose_duration=(t1 - t0) * 1000.0,
        check_duration=(t2 - t1) * 1000.0,
        conflicts=report.counts,
    )
