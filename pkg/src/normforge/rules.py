"""LRML-S norm documents and their translation to an executable rule core.

LRML-S is a small XML interchange format for legal rules: each norm wraps
one strict/defeasible/defeater rule and carries a source citation, a
jurisdiction and a validity interval; a superiority (override) relation
resolves conflicts between rules.  Translation selects the norms valid at
a given date and strips the legal metadata, keeping a traceability map
from every surviving rule back to its norm.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from datetime import date
from xml.etree import ElementTree
from xml.sax.saxutils import escape, quoteattr

from .errors import NormParseError, StratificationError
from .facts import Violation

__all__ = [
    "Atom",
    "BodyLiteral",
    "CoreProgram",
    "Literal",
    "Norm",
    "Rule",
    "Rulebase",
    "Term",
    "STRENGTHS",
    "format_literal",
    "parse_core",
    "parse_literal",
    "parse_lrmls",
    "serialize_core",
    "serialize_lrmls",
    "stratify",
    "translate_to_core",
    "validate_rulebase",
]

STRENGTHS = ("strict", "defeasible", "defeater")

_TOKEN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Term:
    """A variable (leading uppercase) or a constant (anything else)."""

    name: str

    @property
    def is_variable(self):
        return self.name[0].isupper()


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self):
        return len(self.args)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def complement(self):
        return Literal(self.atom, not self.negated)

    def variables(self):
        return {t.name for t in self.atom.args if t.is_variable}

    def is_ground(self):
        return not any(t.is_variable for t in self.atom.args)


@dataclass(frozen=True)
class BodyLiteral:
    literal: Literal
    naf: bool = False


@dataclass(frozen=True)
class Rule:
    id: str
    strength: str
    head: Literal
    body: tuple[BodyLiteral, ...] = ()


@dataclass(frozen=True)
class Norm:
    id: str
    rule: Rule
    source: str
    jurisdiction: str
    valid_from: date
    valid_to: date | None = None

    def valid_at(self, d: date) -> bool:
        return self.valid_from <= d and (self.valid_to is None or d < self.valid_to)


@dataclass(frozen=True)
class Rulebase:
    norms: tuple[Norm, ...] = ()
    overrides: frozenset = frozenset()
    jurisdiction: str = "US"

    def rule_ids(self):
        return [n.rule.id for n in self.norms]


@dataclass
class CoreProgram:
    rules: tuple[Rule, ...] = ()
    overrides: frozenset = frozenset()
    trace: dict = field(default_factory=dict)  # rule id -> norm id

    def __eq__(self, other):
        return (
            isinstance(other, CoreProgram)
            and self.rules == other.rules
            and self.overrides == other.overrides
            and self.trace == other.trace
        )


# ---------------------------------------------------------------------------
# literal text syntax: p(a,B), ~q(c), arity-0 atoms written bare


def format_literal(lit: Literal) -> str:
    neg = "~" if lit.negated else ""
    if not lit.atom.args:
        return neg + lit.atom.predicate
    return neg + lit.atom.predicate + "(" + ",".join(t.name for t in lit.atom.args) + ")"


def format_body_literal(bl: BodyLiteral) -> str:
    text = format_literal(bl.literal)
    return "naf " + text if bl.naf else text


def _check_token(token, what):
    if not _TOKEN.match(token or ""):
        raise NormParseError(f"invalid {what} token: {token!r}", token=str(token))
    return token


def parse_literal(text: str) -> Literal:
    """Parse ``pred(t1,...)`` / ``~pred(...)`` literal syntax."""
    text = text.strip()
    negated = text.startswith("~")
    if negated:
        text = text[1:].strip()
    m = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\Z", text, re.DOTALL)
    if not m:
        raise NormParseError(f"cannot parse literal: {text!r}", token=text)
    pred = m.group(1)
    if pred[0].isupper():
        raise NormParseError(f"predicate {pred!r} must start lowercase", token=pred)
    argtext = m.group(2)
    args = ()
    if argtext is not None and argtext.strip():
        args = tuple(
            Term(_check_token(a.strip(), "term")) for a in argtext.split(",")
        )
    return Literal(Atom(pred, args), negated)


def parse_body_literal(text: str) -> BodyLiteral:
    text = text.strip()
    if text.startswith("naf "):
        return BodyLiteral(parse_literal(text[4:]), naf=True)
    return BodyLiteral(parse_literal(text), naf=False)


# ---------------------------------------------------------------------------
# rule-level checks


def check_rule_safety(rule: Rule):
    """Raise unless every head/naf variable is bound by a positive body literal."""
    bound = set()
    for bl in rule.body:
        if not bl.naf:
            bound |= bl.literal.variables()
    free = rule.head.variables() - bound
    for bl in rule.body:
        if bl.naf:
            free |= bl.literal.variables() - bound
    if free:
        name = sorted(free)[0]
        raise NormParseError(
            f"unsafe rule {rule.id!r}: variable {name} not bound by a positive body literal",
            token=name,
        )
    if rule.strength == "strict" and any(bl.naf for bl in rule.body):
        raise NormParseError(
            f"strict rule {rule.id!r} must not use negation-as-failure", token=rule.id
        )


# ---------------------------------------------------------------------------
# LRML-S parsing


def _parse_date(text, what):
    try:
        return date.fromisoformat(text)
    except (TypeError, ValueError):
        raise NormParseError(f"invalid {what} date: {text!r}", token=str(text)) from None


def _require_attrs(el, required, optional=()):
    for key in el.attrib:
        if key not in required and key not in optional:
            raise NormParseError(f"unknown attribute {key!r} on <{el.tag}>", token=key)
    for key in required:
        if key not in el.attrib:
            raise NormParseError(f"missing attribute {key!r} on <{el.tag}>", token=key)


def _parse_atom_el(el) -> Literal:
    if el.tag == "neg":
        children = list(el)
        if len(children) != 1 or children[0].tag != "atom":
            raise NormParseError("<neg> must wrap exactly one <atom>")
        return _parse_atom_el(children[0]).complement()
    if el.tag != "atom":
        raise NormParseError(f"unknown element <{el.tag}> where a literal was expected", token=el.tag)
    _require_attrs(el, ("pred",))
    pred = _check_token(el.get("pred"), "predicate")
    if pred[0].isupper():
        raise NormParseError(f"predicate {pred!r} must start lowercase", token=pred)
    args = []
    for child in el:
        text = (child.text or "").strip()
        _check_token(text, child.tag)
        if child.tag == "var":
            if not text[0].isupper():
                raise NormParseError(f"variable {text!r} must start uppercase", token=text)
        elif child.tag == "const":
            if text[0].isupper():
                raise NormParseError(f"constant {text!r} must not start uppercase", token=text)
        else:
            raise NormParseError(f"unknown element <{child.tag}> in <atom>", token=child.tag)
        args.append(Term(text))
    return Literal(Atom(pred, tuple(args)))


def _parse_body_el(el) -> BodyLiteral:
    if el.tag == "naf":
        children = list(el)
        if len(children) != 1:
            raise NormParseError("<naf> must wrap exactly one literal")
        return BodyLiteral(_parse_atom_el(children[0]), naf=True)
    return BodyLiteral(_parse_atom_el(el), naf=False)


def _parse_rule_el(el) -> Rule:
    _require_attrs(el, ("id", "strength"))
    rid = _check_token(el.get("id"), "rule id")
    strength = el.get("strength")
    if strength not in STRENGTHS:
        raise NormParseError(f"unknown rule strength {strength!r}", token=strength)
    head = None
    body = []
    seen = set()
    for child in el:
        if child.tag == "head":
            if "head" in seen:
                raise NormParseError(f"rule {rid!r} has more than one <head>", token=rid)
            seen.add("head")
            literals = list(child)
            if len(literals) != 1:
                raise NormParseError(f"<head> of rule {rid!r} must hold exactly one literal")
            head = _parse_atom_el(literals[0])
        elif child.tag == "body":
            if "body" in seen:
                raise NormParseError(f"rule {rid!r} has more than one <body>", token=rid)
            seen.add("body")
            body = [_parse_body_el(b) for b in child]
        else:
            raise NormParseError(f"unknown element <{child.tag}> in <rule>", token=child.tag)
    if head is None:
        raise NormParseError(f"rule {rid!r} has no <head>", token=rid)
    rule = Rule(rid, strength, head, tuple(body))
    check_rule_safety(rule)
    return rule


def parse_lrmls(data) -> Rulebase:
    """Parse an LRML-S document into a validated Rulebase."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        root = ElementTree.fromstring(data)
    except ElementTree.ParseError as exc:
        raise NormParseError(f"XML is not well-formed: {exc}") from None
    if root.tag != "lrmls":
        raise NormParseError(f"root element must be <lrmls>, got <{root.tag}>", token=root.tag)
    _require_attrs(root, ("jurisdiction",))
    jurisdiction = _check_token(root.get("jurisdiction"), "jurisdiction")

    norms = []
    overrides = set()
    norm_ids = set()
    rule_ids = set()
    for child in root:
        if child.tag == "norm":
            _require_attrs(child, ("id", "source", "from"), optional=("to",))
            nid = _check_token(child.get("id"), "norm id")
            if nid in norm_ids:
                raise NormParseError(f"duplicate norm id {nid!r}", token=nid)
            norm_ids.add(nid)
            valid_from = _parse_date(child.get("from"), "from")
            valid_to = None
            if child.get("to") is not None:
                valid_to = _parse_date(child.get("to"), "to")
                if not valid_from < valid_to:
                    raise NormParseError(
                        f"norm {nid!r}: 'from' date must precede 'to' date", token=nid
                    )
            rule_els = list(child)
            if len(rule_els) != 1 or rule_els[0].tag != "rule":
                raise NormParseError(f"norm {nid!r} must contain exactly one <rule>", token=nid)
            rule = _parse_rule_el(rule_els[0])
            if rule.id in rule_ids:
                raise NormParseError(f"duplicate rule id {rule.id!r}", token=rule.id)
            rule_ids.add(rule.id)
            norms.append(
                Norm(nid, rule, child.get("source"), jurisdiction, valid_from, valid_to)
            )
        elif child.tag == "override":
            _require_attrs(child, ("sup", "inf"))
            overrides.add((child.get("sup"), child.get("inf")))
        else:
            raise NormParseError(f"unknown element <{child.tag}> in <lrmls>", token=child.tag)

    for sup, inf in overrides:
        for rid in (sup, inf):
            if rid not in rule_ids:
                raise NormParseError(f"override references unknown rule id {rid!r}", token=rid)
        if sup == inf:
            raise NormParseError(f"override pairs rule {sup!r} with itself", token=sup)
    return Rulebase(tuple(norms), frozenset(overrides), jurisdiction)


# ---------------------------------------------------------------------------
# canonical XML writers (attributes in fixed sorted order, stable layout)


def _literal_xml(out, lit: Literal, indent):
    pad = " " * indent
    if lit.negated:
        out.write(f"{pad}<neg>\n")
        _literal_xml(out, lit.complement(), indent + 2)
        out.write(f"{pad}</neg>\n")
        return
    if not lit.atom.args:
        out.write(f"{pad}<atom pred={quoteattr(lit.atom.predicate)}/>\n")
        return
    out.write(f"{pad}<atom pred={quoteattr(lit.atom.predicate)}>")
    for term in lit.atom.args:
        tag = "var" if term.is_variable else "const"
        out.write(f"<{tag}>{escape(term.name)}</{tag}>")
    out.write("</atom>\n")


def _rule_xml(out, rule: Rule, indent, extra_attrs=()):
    pad = " " * indent
    attrs = [("id", rule.id)] + list(extra_attrs) + [("strength", rule.strength)]
    attrs.sort()
    rendered = " ".join(f"{k}={quoteattr(v)}" for k, v in attrs)
    out.write(f"{pad}<rule {rendered}>\n")
    out.write(f"{pad}  <head>\n")
    _literal_xml(out, rule.head, indent + 4)
    out.write(f"{pad}  </head>\n")
    if rule.body:
        out.write(f"{pad}  <body>\n")
        for bl in rule.body:
            if bl.naf:
                out.write(f"{pad}    <naf>\n")
                _literal_xml(out, bl.literal, indent + 6)
                out.write(f"{pad}    </naf>\n")
            else:
                _literal_xml(out, bl.literal, indent + 4)
        out.write(f"{pad}  </body>\n")
    out.write(f"{pad}</rule>\n")


def serialize_lrmls(rb: Rulebase) -> bytes:
    """Canonical LRML-S serialization; parse_lrmls inverts it exactly."""
    out = io.StringIO()
    out.write(f"<lrmls jurisdiction={quoteattr(rb.jurisdiction)}>\n")
    for norm in rb.norms:
        attrs = [("from", norm.valid_from.isoformat()), ("id", norm.id),
                 ("source", norm.source)]
        if norm.valid_to is not None:
            attrs.append(("to", norm.valid_to.isoformat()))
        attrs.sort()
        rendered = " ".join(f"{k}={quoteattr(v)}" for k, v in attrs)
        out.write(f"  <norm {rendered}>\n")
        _rule_xml(out, norm.rule, 4)
        out.write("  </norm>\n")
    for sup, inf in sorted(rb.overrides):
        out.write(f"  <override inf={quoteattr(inf)} sup={quoteattr(sup)}/>\n")
    out.write("</lrmls>\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# rulebase validation


def _predicate_arities(rules):
    arities = {}
    for rule in rules:
        literals = [rule.head] + [bl.literal for bl in rule.body]
        for lit in literals:
            arities.setdefault(lit.atom.predicate, set()).add(lit.atom.arity)
    return arities


def validate_rulebase(rb: Rulebase) -> list[Violation]:
    """Coherence checks: arity conflicts, override cycles, empty citations."""
    out = []
    arities = _predicate_arities([n.rule for n in rb.norms])
    for pred in sorted(arities):
        if len(arities[pred]) > 1:
            lo, hi = sorted(arities[pred])[:2]
            out.append(Violation(pred, f"arity conflict {lo} vs {hi}"))

    # override cycles among rules with complementary heads
    heads = {n.rule.id: n.rule.head for n in rb.norms}
    edges = {}
    for sup, inf in rb.overrides:
        h1, h2 = heads.get(sup), heads.get(inf)
        if h1 is None or h2 is None:
            continue
        if h1.atom.predicate == h2.atom.predicate and h1.negated != h2.negated:
            edges.setdefault(sup, set()).add(inf)
    seen_cycles = set()
    for start in sorted(edges):
        stack, path = [(start, iter(sorted(edges.get(start, ()))))], [start]
        on_path = {start}
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt in on_path:
                    cycle = frozenset(path[path.index(nxt):])
                    if cycle not in seen_cycles:
                        seen_cycles.add(cycle)
                        out.append(Violation(",".join(sorted(cycle)), "override cycle"))
                elif nxt in edges:
                    stack.append((nxt, iter(sorted(edges.get(nxt, ())))))
                    path.append(nxt)
                    on_path.add(nxt)
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                on_path.discard(path.pop())

    for norm in rb.norms:
        if not (norm.source or "").strip():
            out.append(Violation(norm.id, "empty source citation"))
    return out


# ---------------------------------------------------------------------------
# translation to the executable core


def translate_to_core(rb: Rulebase, as_of: date) -> CoreProgram:
    """Select the norms valid at ``as_of`` and strip their legal metadata."""
    selected = [n for n in rb.norms if n.valid_at(as_of)]
    rules = tuple(n.rule for n in selected)
    surviving = {r.id for r in rules}
    overrides = frozenset(
        (sup, inf) for sup, inf in rb.overrides if sup in surviving and inf in surviving
    )
    trace = {n.rule.id: n.id for n in selected}
    return CoreProgram(rules, overrides, trace)


def serialize_core(cp: CoreProgram) -> bytes:
    """Canonical core-rule interchange document (rules kept in input order)."""
    out = io.StringIO()
    out.write("<core>\n")
    for rule in cp.rules:
        _rule_xml(out, rule, 2, extra_attrs=[("norm", cp.trace[rule.id])])
    for sup, inf in sorted(cp.overrides):
        out.write(f"  <override inf={quoteattr(inf)} sup={quoteattr(sup)}/>\n")
    out.write("</core>\n")
    return out.getvalue().encode("utf-8")


def parse_core(data) -> CoreProgram:
    """Inverse of serialize_core."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        root = ElementTree.fromstring(data)
    except ElementTree.ParseError as exc:
        raise NormParseError(f"XML is not well-formed: {exc}") from None
    if root.tag != "core":
        raise NormParseError(f"root element must be <core>, got <{root.tag}>", token=root.tag)
    _require_attrs(root, ())
    rules = []
    overrides = set()
    trace = {}
    rule_ids = set()
    for child in root:
        if child.tag == "rule":
            _require_attrs(child, ("id", "norm", "strength"))
            norm_id = child.get("norm")
            stripped = ElementTree.Element(
                "rule", {"id": child.get("id"), "strength": child.get("strength")}
            )
            stripped.extend(list(child))
            rule = _parse_rule_el(stripped)
            if rule.id in rule_ids:
                raise NormParseError(f"duplicate rule id {rule.id!r}", token=rule.id)
            rule_ids.add(rule.id)
            rules.append(rule)
            trace[rule.id] = norm_id
        elif child.tag == "override":
            _require_attrs(child, ("sup", "inf"))
            overrides.add((child.get("sup"), child.get("inf")))
        else:
            raise NormParseError(f"unknown element <{child.tag}> in <core>", token=child.tag)
    for sup, inf in overrides:
        for rid in (sup, inf):
            if rid not in rule_ids:
                raise NormParseError(f"override references unknown rule id {rid!r}", token=rid)
    return CoreProgram(tuple(rules), frozenset(overrides), trace)


# ---------------------------------------------------------------------------
# stratification


def stratify(cp: CoreProgram) -> dict:
    """Assign minimal strata to predicates; naf dependencies must go down.

    Positive body dependencies may stay within a stratum; a predicate
    reached through naf must live strictly below the rule head.  Raises
    StratificationError listing the predicates on one naf cycle.
    """
    preds = set()
    pos_edges = {}  # body pred -> {head preds}
    naf_edges = {}
    all_edges = {}
    for rule in cp.rules:
        head = rule.head.atom.predicate
        preds.add(head)
        for bl in rule.body:
            body = bl.literal.atom.predicate
            preds.add(body)
            target = naf_edges if bl.naf else pos_edges
            target.setdefault(body, set()).add(head)
            all_edges.setdefault(body, set()).add(head)

    sccs = _tarjan(preds, all_edges)
    scc_of = {}
    for i, scc in enumerate(sccs):
        for p in scc:
            scc_of[p] = i

    for body, heads in naf_edges.items():
        for head in heads:
            if scc_of[body] == scc_of[head]:
                cycle = _find_cycle(head, body, all_edges, set(sccs[scc_of[body]]))
                raise StratificationError(cycle)

    # Tarjan emits an SCC before anything that feeds into it; reverse so
    # each SCC sees its dependencies' strata already assigned.
    strata = {}
    for scc in reversed(sccs):
        level = 0
        for p in scc:
            for body, heads in pos_edges.items():
                if p in heads and body not in scc:
                    level = max(level, strata[body])
            for body, heads in naf_edges.items():
                if p in heads:
                    level = max(level, strata[body] + 1)
        for p in scc:
            strata[p] = level
    return strata


def _tarjan(nodes, edges):
    index = {}
    lowlink = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = [0]

    def strongconnect(v):
        work = [(v, iter(sorted(edges.get(v, ()))))]
        index[v] = lowlink[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(edges.get(w, ())))))
                    advanced = True
                    break
                elif w in on_stack:
                    lowlink[node] = min(lowlink[node], index[w])
            if not advanced:
                work.pop()
                if work:
                    parent = work[-1][0]
                    lowlink[parent] = min(lowlink[parent], lowlink[node])
                if lowlink[node] == index[node]:
                    scc = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        scc.append(w)
                        if w == node:
                            break
                    sccs.append(sorted(scc))

    for v in sorted(nodes):
        if v not in index:
            strongconnect(v)
    return sccs


def _find_cycle(src, dst, edges, members):
    """Shortest path src -> dst inside one SCC, closing a naf cycle dst -> src."""
    if src == dst:
        return [src]
    frontier = [[src]]
    seen = {src}
    while frontier:
        nxt = []
        for path in frontier:
            for w in sorted(edges.get(path[-1], ())):
                if w not in members or w in seen:
                    continue
                if w == dst:
                    return path + [w]
                seen.add(w)
                nxt.append(path + [w])
        frontier = nxt
    return sorted(members)
