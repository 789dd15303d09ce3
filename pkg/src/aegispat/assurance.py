"""Development-assurance-level allocation checks and trade-off scoring.

A pattern instance (anything with ``kind``, ``roles`` and ``options``) is
checked against an :class:`AllocationNode` carrying the level allocated to the
function and the level assigned to each implementing element. The checker
examines allocation *structure* only; it says nothing about whether the
evidence behind a level is sufficient.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Any, Iterable, Mapping, Optional, Sequence

from .core import Role


class DalLevel(IntEnum):
    """Assurance levels; ``A`` is the most stringent and compares highest."""

    E = 0
    D = 1
    C = 2
    B = 3
    A = 4

    def lowered(self, steps: int) -> "DalLevel":
        return DalLevel(max(0, self.value - steps))

    @classmethod
    def parse(cls, value: "str | DalLevel") -> "DalLevel":
        if isinstance(value, DalLevel):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown assurance level {value!r}; expected one of A-E") from None

    def __str__(self) -> str:
        return self.name


class Severity(str, Enum):
    VIOLATION = "violation"
    WARNING = "warning"
    INFO = "info"


RULES: dict[str, str] = {
    "R0": "every implementing element carries an allocation",
    "R1": "single channel: the complex element carries the full allocated level",
    "R2": "monitored patterns: monitor, switch, backup and alternative elements carry the allocated "
    "level, and no monitor sits below the element it monitors",
    "R3": "relief bound: a relieved element sits at most `relief` levels below the allocation",
    "R4": "backup in parallel: one channel at the allocated level; relief on the other needs declared independence",
    "R5": "runtime assurance: monitors inside the complex-function boundary defeat the relief",
    "R6": "input partitioning: every channel and the selector carry the allocated level",
    "R7": "adaptive value overriding at level A or B erodes the fail-safe safety margin",
    "R8": "patterns without an architectural relief argument: every element carries the allocated level",
    "C1": "credit once: at most one architectural relief credit along any decomposition path",
}


class KindMismatch(ValueError):
    pass


class ArchitectureError(ValueError):
    pass


@dataclass(frozen=True)
class Finding:
    severity: Severity
    rule: str
    message: str
    location: str

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule id {self.rule!r}")

    def to_dict(self) -> dict:
        return {"severity": self.severity.value, "rule": self.rule, "message": self.message, "location": self.location}


@dataclass(frozen=True)
class AllocationNode:
    """A function with its allocated level and, optionally, the pattern that
    implements it.

    ``elements`` maps implementing component ids to their levels. ``roles``
    is only needed when no built pattern instance is at hand (architecture
    files); ``children`` are nested functions (e.g. items).
    """

    function: str
    allocated: DalLevel
    kind: Optional[str] = None
    elements: Mapping[str, DalLevel] = field(default_factory=dict)
    roles: Mapping[str, Role] = field(default_factory=dict)
    options: Mapping[str, Any] = field(default_factory=dict)
    credit_taken: bool = False
    independent: bool = False
    children: tuple["AllocationNode", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "allocated", DalLevel.parse(self.allocated))
        object.__setattr__(self, "elements", {k: DalLevel.parse(v) for k, v in self.elements.items()})
        object.__setattr__(self, "roles", {k: Role(v) for k, v in self.roles.items()})
        object.__setattr__(self, "children", tuple(self.children))
        if self.credit_taken and self.kind is None:
            raise ArchitectureError(f"{self.function}: credit can only be taken where a pattern decomposes the function")


@dataclass(frozen=True)
class ArchitectureView:
    """Stand-in for a pattern instance, built from an architecture file."""

    kind: str
    roles: Mapping[str, Role]
    options: Mapping[str, Any]


def view_of(node: AllocationNode) -> ArchitectureView:
    if node.kind is None:
        raise ArchitectureError(f"{node.function}: no pattern kind to validate")
    return ArchitectureView(node.kind, dict(node.roles), dict(node.options))


# -- rule evaluation --------------------------------------------------------

WRAPPER_ROLES = frozenset({Role.MONITOR, Role.SWITCH, Role.ALTERNATIVE, Role.BACKUP})
MONITORED_KINDS = frozenset({"active_monitor", "combined", "rta"})
UNRELIEVED_KINDS = frozenset({"tmr", "function_modification", "value_override"})


def _kind(instance) -> str:
    kind = instance.kind
    return kind.value if isinstance(kind, Enum) else str(kind)


def validate_allocation(instance, node: AllocationNode, relief: int = 2) -> list[Finding]:
    """Apply the rule table to one decomposition. ``relief`` is the largest
    number of levels an element may sit below the allocation."""
    kind = _kind(instance)
    if node.kind is not None and node.kind != kind:
        raise KindMismatch(f"{node.function}: allocation is for {node.kind}, instance is {kind}")
    if relief < 0:
        raise ValueError("relief must be >= 0")
    allocated = node.allocated
    roles: Mapping[str, Role] = {cid: Role(r) for cid, r in instance.roles.items()}
    options = instance.options or {}
    findings: list[Finding] = []
    where = node.function

    def add(severity, rule, message, loc=None):
        findings.append(Finding(severity, rule, message, f"{where}/{loc}" if loc else where))

    dal: dict[str, DalLevel] = {}
    for cid in roles:
        if cid in node.elements:
            dal[cid] = node.elements[cid]
        else:
            add(Severity.VIOLATION, "R0", f"{cid} ({roles[cid].value}) has no allocation", cid)
    for cid in node.elements:
        if cid not in roles:
            add(Severity.WARNING, "R0", f"allocation names {cid}, which is not part of the pattern", cid)

    inside = list(options.get("inside_boundary") or ())
    complex_ids = [c for c, r in roles.items() if r is Role.COMPLEX] + [
        c for c in inside if c in roles and roles[c] is not Role.MONITOR and roles[c] is not Role.COMPLEX
    ]

    def full_level(ids: Iterable[str], rule: str, what: str):
        for cid in ids:
            if cid in dal and dal[cid] < allocated:
                add(Severity.VIOLATION, rule, f"{what} {cid} at {dal[cid]} below allocated {allocated}", cid)

    def relief_bound(ids: Iterable[str]):
        floor = allocated.lowered(relief)
        for cid in ids:
            if cid not in dal:
                continue
            if dal[cid] < floor:
                add(Severity.VIOLATION, "R3",
                    f"{cid} at {dal[cid]} is more than {relief} levels below allocated {allocated}", cid)
            elif dal[cid] < allocated:
                add(Severity.INFO, "R3", f"{cid} relieved from {allocated} to {dal[cid]}", cid)

    if kind == "single_channel":
        full_level(complex_ids, "R1", "complex element")
    elif kind in MONITORED_KINDS:
        wrappers = [c for c, r in roles.items() if r in WRAPPER_ROLES]
        complex_top = max((dal[c] for c in complex_ids if c in dal), default=None)
        for cid in wrappers:
            if cid in dal and dal[cid] < allocated:
                msg = f"{roles[cid].value} {cid} at {dal[cid]} below allocated {allocated}"
                if roles[cid] is Role.MONITOR and complex_top is not None and dal[cid] < complex_top:
                    msg += f" and below the monitored element at {complex_top}"
                add(Severity.VIOLATION, "R2", msg, cid)
        relief_bound(complex_ids)
        if kind == "rta" and options.get("boundary") == "monitor_inside":
            add(Severity.VIOLATION, "R5", "monitors placed inside the complex-function boundary", "boundary")
    elif kind == "backup_parallel":
        channels = [c for c, r in roles.items() if r in (Role.COMPLEX, Role.BACKUP) and c in dal]
        if channels and max(dal[c] for c in channels) < allocated:
            add(Severity.VIOLATION, "R4", f"no channel carries allocated level {allocated}")
        relieved = [c for c in channels if dal[c] < allocated]
        if relieved and not node.independent:
            add(Severity.VIOLATION, "R4",
                f"relief on {', '.join(relieved)} claimed without declared channel independence")
        relief_bound(channels)
        full_level([c for c, r in roles.items() if r is Role.SWITCH], "R4", "switch")
    elif kind == "input_partitioning":
        full_level(roles, "R6", "element")
    elif kind in UNRELIEVED_KINDS:
        full_level(roles, "R8", "element")
    else:
        raise KindMismatch(f"no allocation rules for pattern kind {kind!r}")

    if kind == "value_override" and options.get("adaptive") and allocated >= DalLevel.B:
        add(Severity.WARNING, "R7",
            f"adaptive uncertainty threshold at level {allocated} lowers the fail-safe margin in low-risk situations")
    return findings


def check_credit_once(root: AllocationNode) -> list[Finding]:
    """One violation per root-to-leaf path taking credit more than once."""
    findings: list[Finding] = []

    def walk(node: AllocationNode, path: tuple[str, ...], credits: tuple[str, ...]):
        path = path + (node.function,)
        if node.credit_taken:
            credits = credits + (node.function,)
        if not node.children:
            if len(credits) >= 2:
                findings.append(Finding(
                    Severity.VIOLATION, "C1",
                    f"relief credit taken {len(credits)} times on one path: {', '.join(credits)}",
                    "/".join(path),
                ))
            return
        for child in node.children:
            walk(child, path, credits)

    walk(root, (), ())
    return findings


def validate_tree(root: AllocationNode, relief: int = 2, instances: Optional[Mapping[str, Any]] = None) -> list[Finding]:
    """Validate every decomposed node (using ``instances[function]`` when
    given, else the node's own role map), then the credit-once rule."""
    findings: list[Finding] = []
    stack = [root]
    while stack:
        node = stack.pop(0)
        if node.kind is not None:
            inst = (instances or {}).get(node.function) or view_of(node)
            findings += validate_allocation(inst, node, relief)
        stack = list(node.children) + stack
    return findings + check_credit_once(root)


def has_violation(findings: Iterable[Finding]) -> bool:
    return any(f.severity is Severity.VIOLATION for f in findings)


# -- architecture files -----------------------------------------------------

_ROLE_ID = re.compile(r"^([a-z]+)_?\d*$")


def _element(cid: str, spec) -> tuple[Role, DalLevel]:
    if isinstance(spec, str):
        m = _ROLE_ID.match(cid)
        try:
            role = Role(m.group(1)) if m else None
        except ValueError:
            role = None
        if role is None:
            raise ArchitectureError(f"cannot infer a role from element id {cid!r}; use {{role, dal}}")
        return role, DalLevel.parse(spec)
    return Role(spec["role"]), DalLevel.parse(spec["dal"])


def node_from_dict(data: Mapping[str, Any]) -> AllocationNode:
    pattern = data.get("pattern")
    kwargs: dict[str, Any] = {}
    if pattern is not None:
        roles, levels = {}, {}
        for cid, spec in pattern.get("elements", {}).items():
            roles[cid], levels[cid] = _element(cid, spec)
        kwargs = dict(
            kind=pattern["kind"],
            elements=levels,
            roles=roles,
            options=dict(pattern.get("options", {})),
            credit_taken=bool(pattern.get("credit_taken", False)),
            independent=bool(pattern.get("independent", False)),
        )
    return AllocationNode(
        function=data["function"],
        allocated=DalLevel.parse(data["allocated"]),
        children=tuple(node_from_dict(c) for c in data.get("children", [])),
        **kwargs,
    )


# -- trade-off scoring ------------------------------------------------------


@dataclass(frozen=True)
class TradeMatrix:
    options: tuple[str, ...]
    attributes: tuple[tuple[str, float], ...]
    scores: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        object.__setattr__(self, "attributes", tuple((str(n), float(w)) for n, w in self.attributes))
        object.__setattr__(self, "scores", tuple(tuple(float(v) for v in row) for row in self.scores))
        if any(w < 0 for _, w in self.attributes):
            raise ValueError("attribute weights must be >= 0")
        if not any(w > 0 for _, w in self.attributes):
            raise ValueError("attribute weights must not all be zero")
        if len(self.scores) != len(self.options) or any(len(r) != len(self.attributes) for r in self.scores):
            raise ValueError("score matrix must be options x attributes")
        if len(set(self.options)) != len(self.options):
            raise ValueError("duplicate option names")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TradeMatrix":
        return cls(
            tuple(data["options"]),
            tuple((a["name"], a["weight"]) for a in data["attributes"]),
            tuple(tuple(r) for r in data["scores"]),
        )


@dataclass(frozen=True)
class RankedOption:
    rank: int
    option: str
    total: float


def score_tradeoffs(matrix: TradeMatrix) -> list[RankedOption]:
    """Weighted-sum totals, best first; equal totals ordered by name."""
    weights = [w for _, w in matrix.attributes]
    totals = [(opt, sum(w * s for w, s in zip(weights, row))) for opt, row in zip(matrix.options, matrix.scores)]
    ordered = sorted(totals, key=lambda item: (-item[1], item[0]))
    return [RankedOption(i + 1, opt, total) for i, (opt, total) in enumerate(ordered)]


def trade_matrix_from_reports(rows: Sequence[Mapping[str, Any]], attributes: Mapping[str, float]) -> TradeMatrix:
    """Turn comparison rows into a matrix; ``attributes`` maps a numeric row
    column to its weight. Lower-is-better columns should be negated upstream."""
    names = tuple(attributes)
    return TradeMatrix(
        tuple(r["kind"] for r in rows),
        tuple((n, attributes[n]) for n in names),
        tuple(tuple(float(r[n]) for n in names) for r in rows),
    )


@dataclass(frozen=True)
class AllocationRequest:
    """Convenience for building a node from a pattern instance's role map."""

    function: str
    allocated: DalLevel
    by_role: Mapping[Role, DalLevel]
    credit_taken: bool = False
    independent: bool = False

    def node_for(self, instance) -> AllocationNode:
        levels = {cid: DalLevel.parse(self.by_role[Role(r)]) for cid, r in instance.roles.items() if Role(r) in self.by_role}
        return AllocationNode(
            self.function, self.allocated, _kind(instance), levels,
            credit_taken=self.credit_taken, independent=self.independent,
        )
