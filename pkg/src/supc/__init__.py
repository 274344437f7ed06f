"""Service-function rule composition and flow-rule conflict analysis."""

from .composer import FlowRule, FlowTable, compose, dedup_ratio
from .conflict import Conflict, ConflictKind, ConflictReport, check_all
from .headerspace import MatchSet, PacketHeader
from .ingest import Action, SfKind, SfRule, parse_firewall_file, parse_ids_file

__all__ = [
    "Action",
    "Conflict",
    "ConflictKind",
    "ConflictReport",
    "FlowRule",
    "FlowTable",
    "MatchSet",
    "PacketHeader",
    "SfKind",
    "SfRule",
    "check_all",
    "compose",
    "dedup_ratio",
    "parse_firewall_file",
    "parse_ids_file",
]
