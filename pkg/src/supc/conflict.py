"""Conflict classification over a composed flow table.

Four kinds are detected:

* INTERSECTION - two rules overlap but neither contains the other.
* SUBSUMPTION - one rule's match contains the other's (equal matches too).
* TRANSITIVITY - two ALLOW rules chain (destination of the first overlaps
  the source of the second) into an inferred end-to-end rule, and a third
  rule with a different action overlaps the inferred one.
* SYMMETRY - two ALLOW rules cover opposite directions of a session and a
  third rule with a different action overlaps the return leg.

Priorities play no part in classification.  Every conflict carries a
concrete witness header from the offending overlap.
"""

from __future__ import annotations

import enum
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .composer import FlowTable
from .headerspace import (
    MatchSet,
    PacketHeader,
    field_intersect,
    match_intersect,
    match_overlaps,
    match_reverse,
    match_subset,
    pick_witness,
)
from .ingest import Action


class ConflictKind(enum.IntEnum):
    INTERSECTION = 1
    SUBSUMPTION = 2
    TRANSITIVITY = 3
    SYMMETRY = 4


@dataclass(frozen=True)
class Conflict:
    kind: ConflictKind
    participants: Tuple[int, ...]
    witness: PacketHeader
    actions_differ: bool
    inferred_match: Optional[MatchSet] = None

    def sort_key(self):
        return (self.kind, self.participants)

    def to_dict(self, table: Optional[FlowTable] = None) -> dict:
        d = {
            "kind": self.kind.name,
            "participants": list(self.participants),
            "inferred_match": self.inferred_match.to_dict() if self.inferred_match else None,
            "witness": self.witness.to_dict(),
            "actions_differ": self.actions_differ,
        }
        if table is not None:
            d["priorities"] = [table[i].priority for i in self.participants]
        return d


@dataclass(frozen=True)
class ConflictReport:
    table_hash: str
    conflicts: Tuple[Conflict, ...]

    @property
    def counts(self) -> dict:
        counts = {kind.name.lower(): 0 for kind in ConflictKind}
        for c in self.conflicts:
            counts[c.kind.name.lower()] += 1
        return counts

    def to_json(self, table: Optional[FlowTable] = None) -> str:
        doc = {
            "table_hash": self.table_hash,
            "counts": self.counts,
            "conflicts": [c.to_dict(table) for c in self.conflicts],
        }
        return json.dumps(doc, indent=2) + "\n"


def _pairwise_rows(table: FlowTable, rows) -> List[Conflict]:
    rules = table.rules
    out = []
    for i in rows:
        ri = rules[i]
        for rj in rules[i + 1:]:
            if match_subset(ri.match, rj.match):
                kind, witness = ConflictKind.SUBSUMPTION, pick_witness(ri.match)
            elif match_subset(rj.match, ri.match):
                kind, witness = ConflictKind.SUBSUMPTION, pick_witness(rj.match)
            else:
                overlap = match_intersect(ri.match, rj.match)
                if overlap is None:
                    continue
                kind, witness = ConflictKind.INTERSECTION, pick_witness(overlap)
            out.append(Conflict(kind, (ri.id, rj.id), witness, ri.action is not rj.action))
    return out


def infer_chain(first: MatchSet, second: MatchSet) -> Optional[MatchSet]:
    """End-to-end match implied by forwarding ``first`` then ``second``.

    None when the rules do not chain: the protocols are incompatible or the
    first rule's L3 destination misses the second rule's L3 source.
    """
    proto = field_intersect(first.proto, second.proto)
    if proto is None or field_intersect(first.l3d, second.l3s) is None:
        return None
    return MatchSet(
        l2s=first.l2s,
        l2d=second.l2d,
        l3s=first.l3s,
        l3d=second.l3d,
        l4s=first.l4s,
        l4d=second.l4d,
        proto=proto,
    )


def _transitivity_rows(table: FlowTable, rows) -> List[Conflict]:
    rules = table.rules
    allow = [r for r in rules if r.action is Action.ALLOW]
    blockers = [r for r in rules if r.action is not Action.ALLOW]
    out = []
    for i in rows:
        ri = rules[i]
        if ri.action is not Action.ALLOW:
            continue
        for rj in allow:
            if rj.id == ri.id:
                continue
            inferred = infer_chain(ri.match, rj.match)
            if inferred is None:
                continue
            for rm in blockers:
                overlap = match_intersect(inferred, rm.match)
                if overlap is not None:
                    out.append(Conflict(
                        ConflictKind.TRANSITIVITY, (ri.id, rj.id, rm.id),
                        pick_witness(overlap), True, inferred,
                    ))
    return out


def _symmetry_rows(table: FlowTable, rows) -> List[Conflict]:
    rules = table.rules
    out = []
    for i in rows:
        ri = rules[i]
        if ri.action is not Action.ALLOW:
            continue
        reverse = match_reverse(ri.match)
        for rj in rules[i + 1:]:
            if rj.action is not Action.ALLOW or not match_overlaps(reverse, rj.match):
                continue
            # the later rule of the pair is treated as the return leg
            for rm in rules:
                if rm.id in (ri.id, rj.id) or rm.action is rj.action:
                    continue
                overlap = match_intersect(rm.match, rj.match)
                if overlap is not None:
                    out.append(Conflict(
                        ConflictKind.SYMMETRY, (ri.id, rj.id, rm.id), pick_witness(overlap), True,
                    ))
    return out


def detect_pairwise(table: FlowTable) -> List[Conflict]:
    return _pairwise_rows(table, range(len(table)))


def detect_transitivity(table: FlowTable) -> List[Conflict]:
    return _transitivity_rows(table, range(len(table)))


def detect_symmetry(table: FlowTable) -> List[Conflict]:
    return _symmetry_rows(table, range(len(table)))


def _check_rows(table: FlowTable, rows) -> List[Conflict]:
    rows = list(rows)
    return _pairwise_rows(table, rows) + _transitivity_rows(table, rows) + _symmetry_rows(table, rows)


def check_all(table: FlowTable, workers: int = 1) -> ConflictReport:
    """Run every detector; output is identical for any ``workers`` value.

    With ``workers > 1`` the outer rule index is striped across worker
    processes and the partial lists are merged and sorted.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    n = len(table)
    if workers == 1 or n < 2:
        conflicts = _check_rows(table, range(n))
    else:
        stripes = [range(w, n, workers) for w in range(min(workers, n))]
        with ProcessPoolExecutor(max_workers=len(stripes)) as pool:
            parts = pool.map(_check_rows, [table] * len(stripes), stripes)
            conflicts = [c for part in parts for c in part]
    conflicts.sort(key=Conflict.sort_key)
    return ConflictReport(table.fingerprint(), tuple(conflicts))


def workers_from_env(default: int = 1) -> int:
    value = os.environ.get("SUPC_WORKERS")
    if not value:
        return default
    workers = int(value)
    if workers < 1:
        raise ValueError("SUPC_WORKERS must be >= 1")
    return workers
