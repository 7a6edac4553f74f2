"""Versioned norm store: append-only changesets, as-of snapshots, provenance.

Norms are never destructively deleted.  A repeal closes the validity
interval; an amendment closes the old norm and adds its replacement with
a predecessor/successor link.  The on-disk format is one JSON record per
line; replaying the log from version 0 reproduces the head exactly, which
doubles as the integrity check on open.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import date, datetime, timezone

from .errors import StoreError
from .rules import (
    Norm,
    Rule,
    Rulebase,
    check_rule_safety,
    format_body_literal,
    format_literal,
    parse_body_literal,
    parse_literal,
    validate_rulebase,
    STRENGTHS,
)

__all__ = [
    "AddNorm",
    "AmendNorm",
    "ProvenanceChain",
    "RepealNorm",
    "VersionedStore",
]


@dataclass(frozen=True)
class AddNorm:
    norm: Norm
    citation: str = ""


@dataclass(frozen=True)
class RepealNorm:
    norm_id: str
    end: date
    citation: str = ""


@dataclass(frozen=True)
class AmendNorm:
    norm_id: str
    replacement: Norm
    citation: str = ""


@dataclass(frozen=True)
class ProvenanceChain:
    norm_id: str
    events: tuple  # (version, op kind, citation)
    predecessor: str | None = None
    successor: str | None = None


# ---------------------------------------------------------------------------
# op (de)serialization


def _norm_to_obj(norm: Norm):
    obj = {
        "id": norm.id,
        "source": norm.source,
        "jurisdiction": norm.jurisdiction,
        "from": norm.valid_from.isoformat(),
        "rule": {
            "id": norm.rule.id,
            "strength": norm.rule.strength,
            "head": format_literal(norm.rule.head),
            "body": [format_body_literal(bl) for bl in norm.rule.body],
        },
    }
    if norm.valid_to is not None:
        obj["to"] = norm.valid_to.isoformat()
    return obj


def _norm_from_obj(obj) -> Norm:
    try:
        robj = obj["rule"]
        strength = robj["strength"]
        if strength not in STRENGTHS:
            raise StoreError(f"unknown rule strength {strength!r}")
        rule = Rule(
            robj["id"],
            strength,
            parse_literal(robj["head"]),
            tuple(parse_body_literal(b) for b in robj.get("body", [])),
        )
        check_rule_safety(rule)
        valid_to = date.fromisoformat(obj["to"]) if "to" in obj else None
        return Norm(
            obj["id"],
            rule,
            obj["source"],
            obj.get("jurisdiction", "US"),
            date.fromisoformat(obj["from"]),
            valid_to,
        )
    except (KeyError, ValueError) as exc:
        raise StoreError(f"malformed norm record: {exc}") from None


def op_to_obj(op):
    if isinstance(op, AddNorm):
        return {"op": "add_norm", "citation": op.citation, "norm": _norm_to_obj(op.norm)}
    if isinstance(op, RepealNorm):
        return {
            "op": "repeal_norm",
            "citation": op.citation,
            "norm_id": op.norm_id,
            "end": op.end.isoformat(),
        }
    if isinstance(op, AmendNorm):
        return {
            "op": "amend_norm",
            "citation": op.citation,
            "norm_id": op.norm_id,
            "replacement": _norm_to_obj(op.replacement),
        }
    raise StoreError(f"unknown change op {op!r}")


def op_from_obj(obj):
    kind = obj.get("op")
    try:
        if kind == "add_norm":
            return AddNorm(_norm_from_obj(obj["norm"]), obj.get("citation", ""))
        if kind == "repeal_norm":
            return RepealNorm(
                obj["norm_id"], date.fromisoformat(obj["end"]), obj.get("citation", "")
            )
        if kind == "amend_norm":
            return AmendNorm(
                obj["norm_id"],
                _norm_from_obj(obj["replacement"]),
                obj.get("citation", ""),
            )
    except (KeyError, ValueError) as exc:
        raise StoreError(f"malformed change op: {exc}") from None
    raise StoreError(f"unknown change op kind {kind!r}")


# ---------------------------------------------------------------------------
# the store


def _apply_changeset(norms, links, changeset):
    """Apply ops to a list of norms; returns the new list.  Pure."""
    norms = list(norms)
    by_id = {n.id: i for i, n in enumerate(norms)}

    def add(norm):
        if norm.id in by_id:
            raise StoreError(f"norm id {norm.id!r} already exists")
        by_id[norm.id] = len(norms)
        norms.append(norm)

    def repeal(norm_id, end):
        if norm_id not in by_id:
            raise StoreError(f"unknown norm id {norm_id!r}")
        i = by_id[norm_id]
        target = norms[i]
        if target.valid_to is not None and target.valid_to <= end:
            raise StoreError(
                f"norm {norm_id!r} already repealed at {target.valid_to.isoformat()}"
            )
        if end <= target.valid_from:
            raise StoreError(
                f"repeal date {end} does not follow validity start of {norm_id!r}"
            )
        norms[i] = replace(target, valid_to=end)

    for op in changeset:
        if isinstance(op, AddNorm):
            add(op.norm)
        elif isinstance(op, RepealNorm):
            repeal(op.norm_id, op.end)
        elif isinstance(op, AmendNorm):
            if op.norm_id not in by_id:
                raise StoreError(f"unknown norm id {op.norm_id!r}")
            predecessor = norms[by_id[op.norm_id]]
            if op.replacement.source != predecessor.source:
                raise StoreError(
                    f"amendment of {op.norm_id!r} must keep source provision "
                    f"{predecessor.source!r}"
                )
            repeal(op.norm_id, op.replacement.valid_from)
            add(op.replacement)
            links[op.norm_id] = op.replacement.id
        else:
            raise StoreError(f"unknown change op {op!r}")
    return norms


class VersionedStore:
    """Single-writer versioned rulebase; version 0 is the empty store."""

    def __init__(self, path=None, jurisdiction="US"):
        self.path = path
        self.jurisdiction = jurisdiction
        self.revisions = []  # (version, changeset tuple, timestamp string)
        self.read_only = False
        self.corruption = None
        self._norms = []
        self._links = {}  # amended norm id -> successor norm id

    # -- construction --------------------------------------------------

    @classmethod
    def open(cls, path, jurisdiction="US"):
        """Replay the log at ``path``; a corrupt trailing line leaves the
        store read-only at the last good version."""
        store = cls(path=path, jurisdiction=jurisdiction)
        try:
            with open(path, "r", encoding="utf-8") as handle:
                lines = handle.read().splitlines()
        except FileNotFoundError:
            return store
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                version = record["version"]
                if version != store.head_version() + 1:
                    raise StoreError(
                        f"version {version} out of sequence at line {lineno}"
                    )
                changeset = tuple(op_from_obj(o) for o in record["ops"])
                store._norms = _apply_changeset(store._norms, store._links, changeset)
                store.revisions.append((version, changeset, record.get("timestamp", "")))
            except (json.JSONDecodeError, KeyError, StoreError, TypeError) as exc:
                store.read_only = True
                store.corruption = f"corrupt log record at line {lineno}: {exc}"
                break
        return store

    # -- queries --------------------------------------------------------

    def head_version(self) -> int:
        return self.revisions[-1][0] if self.revisions else 0

    def head(self) -> Rulebase:
        return Rulebase(tuple(self._norms), frozenset(), self.jurisdiction)

    def materialize(self, version: int) -> Rulebase:
        if not 0 <= version <= self.head_version():
            raise StoreError(f"unknown version {version}")
        norms = []
        links = {}
        for v, changeset, _ in self.revisions[:version]:
            norms = _apply_changeset(norms, links, changeset)
        return Rulebase(tuple(norms), frozenset(), self.jurisdiction)

    def as_of(self, d: date) -> Rulebase:
        """Snapshot of the head filtered to the norms valid at ``d``."""
        norms = tuple(n for n in self._norms if n.valid_at(d))
        return Rulebase(norms, frozenset(), self.jurisdiction)

    def diff(self, v1: int, v2: int):
        """Concatenated changesets taking version v1 to version v2."""
        if v1 > v2:
            raise StoreError(f"diff requires v1 <= v2, got {v1} > {v2}")
        for v in (v1, v2):
            if not 0 <= v <= self.head_version():
                raise StoreError(f"unknown version {v}")
        ops = []
        for version, changeset, _ in self.revisions:
            if v1 < version <= v2:
                ops.extend(changeset)
        return tuple(ops)

    def trace(self, norm_id: str) -> ProvenanceChain:
        """Every change event that touched ``norm_id``, in version order."""
        events = []
        for version, changeset, _ in self.revisions:
            for op in changeset:
                if isinstance(op, AddNorm) and op.norm.id == norm_id:
                    events.append((version, "add", op.citation))
                elif isinstance(op, RepealNorm) and op.norm_id == norm_id:
                    events.append((version, "repeal", op.citation))
                elif isinstance(op, AmendNorm):
                    if op.norm_id == norm_id:
                        events.append((version, "amend", op.citation))
                    elif op.replacement.id == norm_id:
                        events.append((version, "add", op.citation))
        if not events:
            raise StoreError(f"unknown norm id {norm_id!r}")
        predecessor = next(
            (old for old, new in self._links.items() if new == norm_id), None
        )
        return ProvenanceChain(
            norm_id, tuple(events), predecessor, self._links.get(norm_id)
        )

    # -- mutation ---------------------------------------------------------

    def commit(self, changeset, timestamp=None) -> int:
        """Apply a changeset atomically; returns the new version id."""
        if self.read_only:
            raise StoreError(f"store is read-only: {self.corruption}")
        changeset = tuple(changeset)
        links = dict(self._links)
        norms = _apply_changeset(self._norms, links, changeset)
        candidate = Rulebase(tuple(norms), frozenset(), self.jurisdiction)
        rule_ids = [n.rule.id for n in norms]
        if len(rule_ids) != len(set(rule_ids)):
            raise StoreError("commit rejected: duplicate rule ids in resulting head")
        violations = validate_rulebase(candidate)
        if violations:
            raise StoreError(
                "commit rejected: " + "; ".join(map(str, violations))
            )
        version = self.head_version() + 1
        if timestamp is None:
            timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        record = {
            "version": version,
            "timestamp": timestamp,
            "ops": [op_to_obj(op) for op in changeset],
        }
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, ensure_ascii=False) + "\n")
        self._norms = norms
        self._links = links
        self.revisions.append((version, changeset, timestamp))
        return version
