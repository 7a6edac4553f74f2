"""Discretized patent facts: elements, attributes, concepts and their grounding.

A fact file describes one patent teaching together with its reference set
(prior-art teachings, disclosures, a concept taxonomy and free-form
annotations), discretized into the three levels element / attribute /
concept.  This module parses and serializes the JSON fact-file format,
checks the discretization invariants, closes the concept taxonomy under
subsumption and compiles everything into a flat set of ground atoms for
the rule engine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import FactFileError, TaxonomyCycleError

__all__ = [
    "Annotation",
    "Attribute",
    "Element",
    "FactBase",
    "ReferenceSet",
    "TechnicalTeaching",
    "Violation",
    "close_taxonomy",
    "ground_atoms",
    "parse_fact_file",
    "serialize_fact_file",
    "validate_discretization",
]

ANNOTATION_KINDS = ("linguistic", "ontological")


@dataclass(frozen=True)
class Violation:
    """A structural defect reported as data rather than an exception."""

    subject: str
    message: str

    def __str__(self):
        return f"{self.subject}: {self.message}"


@dataclass(frozen=True)
class Attribute:
    id: str
    label: str
    concepts: tuple[str, ...]


@dataclass(frozen=True)
class Element:
    id: str
    label: str
    attributes: tuple[Attribute, ...]


@dataclass(frozen=True)
class TechnicalTeaching:
    doc_id: str
    claim_id: str
    elements: tuple[Element, ...]


@dataclass(frozen=True)
class Annotation:
    subject: str
    kind: str
    key: str
    value: str


@dataclass(frozen=True)
class ReferenceSet:
    """One patent teaching plus its prior art, taxonomy and annotations."""

    patent: TechnicalTeaching
    prior_art: tuple[TechnicalTeaching, ...] = ()
    disclosures: tuple[tuple[str, str], ...] = ()
    taxonomy: tuple[tuple[str, str], ...] = ()
    annotations: tuple[Annotation, ...] = ()
    concepts: tuple[tuple[str, str], ...] = ()  # (id, label), declaration order

    def concept_ids(self):
        return [cid for cid, _ in self.concepts]

    def teachings(self):
        return (self.patent,) + self.prior_art


@dataclass(frozen=True)
class FactBase:
    """A set of ground atoms, each a (predicate, constant-tuple) pair."""

    atoms: frozenset = field(default_factory=frozenset)

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom):
        return atom in self.atoms

    def by_predicate(self, pred):
        return {a for a in self.atoms if a[0] == pred}

    def constants(self):
        out = set()
        for _, args in self.atoms:
            out.update(args)
        return out


# ---------------------------------------------------------------------------
# parsing


def _check_id(token, what):
    if not isinstance(token, str) or not token or any(c.isspace() for c in token):
        raise FactFileError(
            f"invalid {what} identifier: {token!r}", token=str(token)
        )
    if token[0].isupper():
        # Identifiers double as rule constants, where a leading uppercase
        # letter would read as a variable.
        raise FactFileError(
            f"{what} identifier {token!r} must not start with an uppercase letter",
            token=token,
        )
    return token


def _check_keys(obj, allowed, where):
    for key in obj:
        if key not in allowed:
            raise FactFileError(f"unknown key {key!r} in {where}", token=key)


def _parse_teaching(obj, where):
    _check_keys(obj, {"doc", "claim", "elements"}, where)
    try:
        doc = _check_id(obj["doc"], "doc")
        claim = _check_id(obj["claim"], "claim")
    except KeyError as exc:
        raise FactFileError(f"missing key {exc.args[0]!r} in {where}") from None
    elements = []
    seen_elems = set()
    for eobj in obj.get("elements", []):
        _check_keys(eobj, {"id", "label", "attributes"}, f"element of {where}")
        eid = _check_id(eobj.get("id"), "element")
        if eid in seen_elems:
            raise FactFileError(f"duplicate element id {eid!r}", token=eid)
        seen_elems.add(eid)
        attrs = []
        seen_attrs = set()
        for aobj in eobj.get("attributes", []):
            _check_keys(aobj, {"id", "label", "concepts"}, f"attribute of {eid}")
            aid = _check_id(aobj.get("id"), "attribute")
            if aid in seen_attrs:
                raise FactFileError(
                    f"duplicate attribute id {aid!r} in element {eid!r}", token=aid
                )
            seen_attrs.add(aid)
            concepts = tuple(
                _check_id(c, "concept reference") for c in aobj.get("concepts", [])
            )
            attrs.append(Attribute(aid, aobj.get("label", ""), concepts))
        elements.append(Element(eid, eobj.get("label", ""), tuple(attrs)))
    return TechnicalTeaching(doc, claim, tuple(elements))


def parse_fact_file(data) -> ReferenceSet:
    """Parse a UTF-8 JSON fact file into a validated ReferenceSet.

    Raises FactFileError with line/column on malformed JSON, and with the
    offending token on duplicate ids or dangling references.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FactFileError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from None
    if not isinstance(doc, dict):
        raise FactFileError("fact file must be a JSON object")
    _check_keys(
        doc,
        {"patent", "prior_art", "disclosures", "taxonomy", "annotations", "concepts"},
        "fact file",
    )
    if "patent" not in doc:
        raise FactFileError("missing required key 'patent'")

    concepts = []
    declared_concepts = set()
    for cobj in doc.get("concepts", []):
        _check_keys(cobj, {"id", "label"}, "concept declaration")
        cid = _check_id(cobj.get("id"), "concept")
        if cid in declared_concepts:
            raise FactFileError(f"duplicate concept id {cid!r}", token=cid)
        declared_concepts.add(cid)
        concepts.append((cid, cobj.get("label", "")))

    patent = _parse_teaching(doc["patent"], "patent")
    prior = []
    seen_pairs = {(patent.doc_id, patent.claim_id)}
    seen_docs = {patent.doc_id}
    for tobj in doc.get("prior_art", []):
        teaching = _parse_teaching(tobj, "prior_art entry")
        if teaching.doc_id in seen_docs:
            raise FactFileError(
                f"duplicate doc id {teaching.doc_id!r}", token=teaching.doc_id
            )
        if (teaching.doc_id, teaching.claim_id) in seen_pairs:
            raise FactFileError(
                f"duplicate teaching {teaching.doc_id!r}/{teaching.claim_id!r}",
                token=teaching.doc_id,
            )
        seen_docs.add(teaching.doc_id)
        seen_pairs.add((teaching.doc_id, teaching.claim_id))
        prior.append(teaching)

    rs = ReferenceSet(
        patent=patent,
        prior_art=tuple(prior),
        disclosures=tuple(
            (_checked_pair_key(d, "doc"), _checked_pair_key(d, "concept"))
            for d in _checked_objs(doc.get("disclosures", []), {"doc", "concept"}, "disclosure")
        ),
        taxonomy=tuple(
            (_checked_pair_key(e, "child"), _checked_pair_key(e, "parent"))
            for e in _checked_objs(doc.get("taxonomy", []), {"child", "parent"}, "taxonomy edge")
        ),
        annotations=tuple(
            Annotation(
                _checked_pair_key(a, "subject"),
                a.get("kind", ""),
                str(a.get("key", "")),
                str(a.get("value", "")),
            )
            for a in _checked_objs(
                doc.get("annotations", []), {"subject", "kind", "key", "value"}, "annotation"
            )
        ),
        concepts=tuple(concepts),
    )
    _validate_references(rs)
    return rs


def _checked_objs(items, allowed, where):
    for obj in items:
        _check_keys(obj, allowed, where)
        yield obj


def _checked_pair_key(obj, key):
    try:
        return _check_id(obj[key], key)
    except KeyError:
        raise FactFileError(f"missing key {key!r}") from None


def _validate_references(rs: ReferenceSet):
    declared_concepts = set(rs.concept_ids())
    docs = {t.doc_id for t in rs.teachings()}
    all_ids = set(docs) | declared_concepts
    for teaching in rs.teachings():
        all_ids.add(teaching.claim_id)
        for element in teaching.elements:
            all_ids.add(element.id)
            for attr in element.attributes:
                all_ids.add(attr.id)
                for cid in attr.concepts:
                    if cid not in declared_concepts:
                        raise FactFileError(
                            f"attribute {attr.id!r} refers to undeclared concept {cid!r}",
                            token=cid,
                        )
    for doc, cid in rs.disclosures:
        if doc not in docs:
            raise FactFileError(f"disclosure references undeclared doc {doc!r}", token=doc)
        if cid not in declared_concepts:
            raise FactFileError(
                f"disclosure references undeclared concept {cid!r}", token=cid
            )
    for child, parent in rs.taxonomy:
        for cid in (child, parent):
            if cid not in declared_concepts:
                raise FactFileError(
                    f"taxonomy edge references undeclared concept {cid!r}", token=cid
                )
    seen_annots = set()
    for ann in rs.annotations:
        if ann.kind not in ANNOTATION_KINDS:
            raise FactFileError(
                f"annotation kind must be one of {ANNOTATION_KINDS}, got {ann.kind!r}",
                token=ann.kind,
            )
        if ann.subject not in all_ids:
            raise FactFileError(
                f"annotation subject {ann.subject!r} does not resolve to a declared id",
                token=ann.subject,
            )
        key = (ann.subject, ann.kind, ann.key)
        if key in seen_annots:
            raise FactFileError(
                f"duplicate annotation {key!r}", token=ann.subject
            )
        seen_annots.add(key)


# ---------------------------------------------------------------------------
# serialization


def _teaching_to_obj(t: TechnicalTeaching):
    return {
        "doc": t.doc_id,
        "claim": t.claim_id,
        "elements": [
            {
                "id": e.id,
                "label": e.label,
                "attributes": [
                    {"id": a.id, "label": a.label, "concepts": list(a.concepts)}
                    for a in e.attributes
                ],
            }
            for e in t.elements
        ],
    }


def serialize_fact_file(rs: ReferenceSet) -> bytes:
    """Canonical JSON serialization; parse_fact_file inverts it exactly."""
    doc = {
        "patent": _teaching_to_obj(rs.patent),
        "prior_art": [_teaching_to_obj(t) for t in rs.prior_art],
        "disclosures": [{"doc": d, "concept": c} for d, c in rs.disclosures],
        "taxonomy": [{"child": a, "parent": b} for a, b in rs.taxonomy],
        "annotations": [
            {"subject": a.subject, "kind": a.kind, "key": a.key, "value": a.value}
            for a in rs.annotations
        ],
        "concepts": [{"id": cid, "label": label} for cid, label in rs.concepts],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


# ---------------------------------------------------------------------------
# validation and grounding


def validate_discretization(rs: ReferenceSet) -> list[Violation]:
    """Report elements without attributes and attributes without concepts.

    Violations come back in document order; an empty list means the
    teaching is discretized down to the concept level everywhere.
    """
    out = []
    for teaching in rs.teachings():
        for element in teaching.elements:
            if not element.attributes:
                out.append(Violation(element.id, "element without attributes"))
            for attr in element.attributes:
                if not attr.concepts:
                    out.append(Violation(attr.id, "attribute without concepts"))
    return out


def close_taxonomy(edges, concepts) -> frozenset:
    """Reflexive-transitive closure of child->parent edges over ``concepts``.

    Raises TaxonomyCycleError naming one cycle if the edges are not acyclic.
    """
    concepts = list(concepts)
    parents = {c: set() for c in concepts}
    for child, parent in edges:
        parents[child].add(parent)

    # cycle check via iterative DFS with an explicit path
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {c: WHITE for c in concepts}
    for start in concepts:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(sorted(parents[start])))]
        color[start] = GRAY
        path = [start]
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == GRAY:
                    cycle = path[path.index(nxt):] + [nxt]
                    raise TaxonomyCycleError(cycle)
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    path.append(nxt)
                    stack.append((nxt, iter(sorted(parents[nxt]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                path.pop()
                stack.pop()

    closure = set()
    for c in concepts:
        reached = {c}
        frontier = [c]
        while frontier:
            node = frontier.pop()
            for parent in parents[node]:
                if parent not in reached:
                    reached.add(parent)
                    frontier.append(parent)
        closure.update((c, r) for r in reached)
    return frozenset(closure)


def ground_atoms(rs: ReferenceSet, closure) -> FactBase:
    """Compile a ReferenceSet into the fixed ground-atom families.

    ``closure`` must be the subsumption relation computed by close_taxonomy
    over the reference set's taxonomy; concept_of lifts attribute concepts
    through it.
    """
    atoms = set()
    atoms.add(("patent_doc", (rs.patent.doc_id,)))
    for t in rs.prior_art:
        atoms.add(("prior_doc", (t.doc_id,)))
    for t in rs.teachings():
        atoms.add(("teaching", (t.doc_id, t.claim_id)))
        claim_concepts = set()
        for element in t.elements:
            atoms.add(("element", (element.id, t.doc_id, t.claim_id)))
            for attr in element.attributes:
                atoms.add(("attribute_of", (attr.id, element.id)))
                for cid in attr.concepts:
                    atoms.add(("refers_to", (attr.id, cid)))
                    claim_concepts.add(cid)
        for cid in claim_concepts:
            for child, parent in closure:
                if child == cid:
                    atoms.add(("concept_of", (t.doc_id, t.claim_id, parent)))
    for doc, cid in rs.disclosures:
        atoms.add(("discloses", (doc, cid)))
    for child, parent in closure:
        atoms.add(("subconcept_of", (child, parent)))
    for ann in rs.annotations:
        atoms.add(("annot", (ann.subject, ann.kind, ann.key, ann.value)))
    return FactBase(frozenset(atoms))
