"""Compose parsed service-function rules into one deduplicated flow table.

Rules with identical ``(match, action)`` collapse into a single
:class:`FlowRule` that remembers every origin.  Priorities come from two
disjoint bands so firewall-derived rules always outrank IDS-derived ones
(higher priority is matched first)::

    firewall   [band_split, 65535]
    IDS        [1, band_split - 1]

Within a band, earlier input gets the higher priority.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .headerspace import MatchSet
from .ingest import Action, Origin, SfKind, SfRule

MAX_PRIORITY = 65535
DEFAULT_BAND_SPLIT = 32768


class CapacityError(ValueError):
    """A priority band ran out of slots."""


@dataclass(frozen=True)
class FlowRule:
    id: int
    match: MatchSet
    action: Action
    priority: int
    origins: Tuple[Origin, ...]

    def __post_init__(self):
        if not 1 <= self.priority <= MAX_PRIORITY:
            raise ValueError(f"priority {self.priority} outside [1, {MAX_PRIORITY}]")
        if not self.origins:
            raise ValueError("a flow rule needs at least one origin")

    @property
    def band(self) -> SfKind:
        """FIREWALL if any origin is a firewall rule, else IDS."""
        if any(o.kind is SfKind.FIREWALL for o in self.origins):
            return SfKind.FIREWALL
        return SfKind.IDS

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "priority": self.priority,
            "match": self.match.to_dict(),
            "action": self.action.value,
            "origins": [{"file": o.file, "line": o.line, "kind": o.kind.value} for o in self.origins],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FlowRule":
        return cls(
            id=int(d["id"]),
            match=MatchSet.from_dict(d["match"]),
            action=Action(d["action"]),
            priority=int(d["priority"]),
            origins=tuple(Origin(o["file"], int(o["line"]), SfKind(o["kind"])) for o in d["origins"]),
        )


@dataclass(frozen=True)
class FlowTable:
    rules: Tuple[FlowRule, ...]
    fw_priority_floor: Optional[int] = None

    def __post_init__(self):
        seen = set()
        for pos, rule in enumerate(self.rules, start=1):
            if rule.id != pos:
                raise ValueError(f"rule ids must be dense 1..n in table order (got {rule.id} at {pos})")
            key = (rule.match, rule.action)
            if key in seen:
                raise ValueError(f"duplicate (match, action) in rule {rule.id}")
            seen.add(key)
        fw = [r.priority for r in self.rules if r.band is SfKind.FIREWALL]
        ids = [r.priority for r in self.rules if r.band is SfKind.IDS]
        if fw and ids and min(fw) <= max(ids):
            raise ValueError("firewall rules must outrank every IDS rule")

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def __getitem__(self, rule_id: int) -> FlowRule:
        return self.rules[rule_id - 1]

    def to_json(self) -> str:
        rules = sorted(self.rules, key=lambda r: (-r.priority, r.id))
        return json.dumps([r.to_dict() for r in rules], indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FlowTable":
        rules = sorted((FlowRule.from_dict(d) for d in json.loads(text)), key=lambda r: r.id)
        fw = [r.priority for r in rules if r.band is SfKind.FIREWALL]
        return cls(tuple(rules), min(fw) if fw else None)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def compose(rules: Iterable[SfRule], band_split: int = DEFAULT_BAND_SPLIT) -> FlowTable:
    """Deduplicate ``rules`` and assign band priorities.

    Duplicates merge their origins onto the first occurrence.  A rule that
    has both firewall and IDS origins lands in the firewall band, ordered by
    its first firewall occurrence.
    """
    if not 1 < band_split <= MAX_PRIORITY:
        raise ValueError(f"band split must be in (1, {MAX_PRIORITY}]")

    origins: Dict[tuple, List[Origin]] = {}
    # position of the first occurrence of each key per kind
    first_seen: Dict[SfKind, Dict[tuple, int]] = {SfKind.FIREWALL: {}, SfKind.IDS: {}}
    for pos, rule in enumerate(rules):
        key = (rule.match, rule.action)
        origins.setdefault(key, []).append(rule.origin)
        first_seen[rule.kind].setdefault(key, pos)

    fw_keys = sorted(first_seen[SfKind.FIREWALL], key=first_seen[SfKind.FIREWALL].get)
    fw_set = set(fw_keys)
    ids_keys = [k for k in sorted(first_seen[SfKind.IDS], key=first_seen[SfKind.IDS].get) if k not in fw_set]

    _check_capacity("firewall", len(fw_keys), MAX_PRIORITY - band_split + 1)
    _check_capacity("IDS", len(ids_keys), band_split - 1)

    flow_rules = []
    for band_top, keys in ((MAX_PRIORITY, fw_keys), (band_split - 1, ids_keys)):
        for offset, key in enumerate(keys):
            match, action = key
            flow_rules.append(
                FlowRule(
                    id=len(flow_rules) + 1,
                    match=match,
                    action=action,
                    priority=band_top - offset,
                    origins=tuple(origins[key]),
                )
            )
    floor = MAX_PRIORITY - len(fw_keys) + 1 if fw_keys else None
    return FlowTable(tuple(flow_rules), floor)


def _check_capacity(band: str, needed: int, slots: int):
    if needed > slots:
        raise CapacityError(f"{band} priority band exhausted: {needed} distinct rules, {slots} slots")


def dedup_ratio(input_count: int, table: Sequence) -> float:
    """Composed rule count over raw rule count."""
    if input_count <= 0:
        raise ValueError("input_count must be positive")
    if len(table) > input_count:
        raise ValueError("table cannot hold more rules than the input")
    return len(table) / input_count
