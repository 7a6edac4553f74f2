"""Ground defeasible-logic evaluation with proof trees.

The engine instantiates a core program over its Herbrand universe and
tags every ground literal with definite (+D/-D) and defeasible (+d/-d)
conclusions under ambiguity-blocking defeasible logic with team defeat.
Negation-as-failure reads -d of its target; callers are expected to have
stratified naf upstream so the fixpoint is unique.

Tag computation is a least fixpoint of three monotone tag producers:
the definite clauses, the constructive defeasible clauses, and a
"can never fire" analysis that closes off literals with no remaining
optimistic derivation.  Literals still undetermined at the fixpoint
(complementary attack cycles that no superiority resolves) are swept
to -d, so the tagging is total over the grounding vocabulary.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import NotProvableError, UnknownLiteralError
from .facts import FactBase

__all__ = [
    "ConclusionSet",
    "GroundProgram",
    "GroundRule",
    "ProofTree",
    "explain",
    "export_conclusions",
    "export_proof_tree",
    "format_ground_literal",
    "ground",
    "infer",
    "literal_to_tuple",
    "query",
]

# A ground literal is (predicate, args, negated); complement flips negated.


def complement(lit):
    return (lit[0], lit[1], not lit[2])


def format_ground_literal(lit) -> str:
    pred, args, neg = lit
    text = ("~" if neg else "") + pred
    if args:
        text += "(" + ",".join(args) + ")"
    return text


def literal_to_tuple(literal):
    """Convert a rules.Literal (must be ground) to the engine tuple form."""
    if not literal.is_ground():
        raise UnknownLiteralError(f"literal is not ground: {literal}")
    return (literal.atom.predicate, tuple(t.name for t in literal.atom.args), literal.negated)


class GroundRule(NamedTuple):
    key: tuple  # (schematic rule id, binding)
    strength: str
    head: tuple
    pos: tuple  # positive body literals
    nafs: tuple  # naf target literals


@dataclass(frozen=True)
class GroundProgram:
    rules: tuple
    overrides: frozenset  # schematic (sup, inf) id pairs
    facts: FactBase


def _format_key(key):
    sid, binding = key
    return sid if not binding else f"{sid}[{','.join(binding)}]"


# ---------------------------------------------------------------------------
# grounding


def ground(cp, fb: FactBase) -> GroundProgram:
    """Instantiate every rule for every substitution over the universe.

    The universe is the set of constants appearing in the fact base or in
    the program; rule safety keeps the result finite.
    """
    universe = set(fb.constants())
    for rule in cp.rules:
        for lit in [rule.head] + [bl.literal for bl in rule.body]:
            for term in lit.atom.args:
                if not term.is_variable:
                    universe.add(term.name)
    rules = _ground_rules(cp.rules, frozenset(universe))
    return GroundProgram(rules, cp.overrides, fb)


_GROUND_CACHE: dict = {}


def _ground_rules(schematic, universe):
    cache_key = (schematic, universe)
    hit = _GROUND_CACHE.get(cache_key)
    if hit is not None:
        return hit
    ordered = sorted(universe)
    out = []
    for rule in schematic:
        var_index = {}
        literals = [(rule.head, None)] + [
            (bl.literal, bl.naf) for bl in rule.body
        ]
        for lit, _ in literals:
            for term in lit.atom.args:
                if term.is_variable and term.name not in var_index:
                    var_index[term.name] = len(var_index)

        def make_inst(lit):
            pred, neg = lit.atom.predicate, lit.negated
            spec = tuple(
                (True, var_index[t.name]) if t.is_variable else (False, t.name)
                for t in lit.atom.args
            )
            if not any(isv for isv, _ in spec):
                fixed = (pred, tuple(v for _, v in spec), neg)
                return lambda b: fixed
            return lambda b: (
                pred,
                tuple(b[v] if isv else v for isv, v in spec),
                neg,
            )

        head_inst = make_inst(rule.head)
        pos_insts = [make_inst(bl.literal) for bl in rule.body if not bl.naf]
        naf_insts = [make_inst(bl.literal) for bl in rule.body if bl.naf]
        rid, strength = rule.id, rule.strength
        for binding in itertools.product(ordered, repeat=len(var_index)):
            out.append(
                GroundRule(
                    (rid, binding),
                    strength,
                    head_inst(binding),
                    tuple(f(binding) for f in pos_insts),
                    tuple(f(binding) for f in naf_insts),
                )
            )
    result = tuple(out)
    if len(_GROUND_CACHE) > 64:
        _GROUND_CACHE.clear()
    _GROUND_CACHE[cache_key] = result
    return result


# ---------------------------------------------------------------------------
# static per-program index, shared across infer calls on the same grounding


class _Index:
    def __init__(self, rules):
        self.rules_by_key = {}
        self.all_by_head = {}
        self.sd_by_head = {}
        self.strict_by_poslit = {}
        self.sd_by_poslit = {}
        self.strict_rules = []
        self.sd_zero_pos = []
        self.vocab_base = set()
        for r in rules:
            self.rules_by_key[r.key] = r
            self.all_by_head.setdefault(r.head, []).append(r)
            self.vocab_base.add(r.head)
            self.vocab_base.update(r.pos)
            self.vocab_base.update(r.nafs)
            if r.strength != "defeater":
                self.sd_by_head.setdefault(r.head, []).append(r)
                if not r.pos:
                    self.sd_zero_pos.append(r)
                for lit in r.pos:
                    self.sd_by_poslit.setdefault(lit, []).append(r)
            if r.strength == "strict":
                self.strict_rules.append(r)
                for lit in r.pos:
                    self.strict_by_poslit.setdefault(lit, []).append(r)
        self.vocab_base |= {complement(l) for l in self.vocab_base}
        self.vocab_base = frozenset(self.vocab_base)
        self.pred_arity_base = {}
        self.universe_base = set()
        for pred, args, _ in self.vocab_base:
            self.pred_arity_base.setdefault(pred, len(args))
            self.universe_base.update(args)


_INDEX_CACHE: dict = {}


def _get_index(rules):
    entry = _INDEX_CACHE.get(id(rules))
    if entry is not None and entry[0] is rules:
        return entry[1]
    idx = _Index(rules)
    if len(_INDEX_CACHE) > 64:
        _INDEX_CACHE.clear()
    _INDEX_CACHE[id(rules)] = (rules, idx)
    return idx


# ---------------------------------------------------------------------------
# inference


@dataclass(frozen=True)
class ConclusionSet:
    vocab: frozenset
    plus_delta: frozenset
    plus_partial: frozenset
    inconsistencies: tuple
    universe: frozenset
    pred_arity: dict = field(default_factory=dict, compare=False)
    delta_support: dict = field(default_factory=dict, compare=False)
    partial_support: dict = field(default_factory=dict, compare=False)

    def tags(self, lit):
        return {
            "+D" if lit in self.plus_delta else "-D",
            "+d" if lit in self.plus_partial else "-d",
        }


def infer(gp: GroundProgram, vocabulary=()) -> ConclusionSet:
    """Compute the proof tags for every ground literal of the program.

    ``vocabulary`` may add literals to be tagged beyond those appearing in
    the program (they come out -D/-d unless derivable).
    """
    idx = _get_index(gp.rules)
    facts = frozenset((p, a, False) for p, a in gp.facts.atoms)
    extras = set(facts) | {complement(l) for l in facts}
    for lit in vocabulary:
        extras.add(lit)
        extras.add(complement(lit))
    extras -= idx.vocab_base
    vocab = idx.vocab_base | extras
    overrides = gp.overrides

    # --- definite phase ---
    plus_delta = set(facts)
    delta_support = {l: "fact" for l in facts}
    counts = {}
    queue = deque(plus_delta)
    for r in idx.strict_rules:
        if not r.pos and r.head not in plus_delta:
            plus_delta.add(r.head)
            delta_support[r.head] = r.key
            queue.append(r.head)
    while queue:
        lit = queue.popleft()
        for r in idx.strict_by_poslit.get(lit, ()):
            c = counts.get(r.key)
            if c is None:
                c = len(r.pos)
            c -= 1
            counts[r.key] = c
            if c == 0 and r.head not in plus_delta:
                plus_delta.add(r.head)
                delta_support[r.head] = r.key
                queue.append(r.head)

    # --- defeasible phase ---
    status = {}
    psupport = {}
    for lit in plus_delta:
        status[lit] = 1
        psupport[lit] = ("delta", ())

    def is_minus(lit):
        s = status.get(lit, 0)
        return s == -1 or (s == 0 and lit not in maybe)

    def is_plus(lit):
        return status.get(lit) == 1

    def applicable(r):
        return all(is_plus(l) for l in r.pos) and all(is_minus(t) for t in r.nafs)

    def discarded(r):
        return any(is_minus(l) for l in r.pos) or any(is_plus(t) for t in r.nafs)

    def possible():
        poss = {l for l, s in status.items() if s == 1}
        pcounts = {}
        pqueue = deque(poss)

        def try_fire(r):
            head = r.head
            if head in poss or status.get(head) == -1:
                return
            if complement(head) in plus_delta:
                return
            if any(status.get(t) == 1 for t in r.nafs):
                return
            poss.add(head)
            pqueue.append(head)

        for r in idx.sd_zero_pos:
            try_fire(r)
        while pqueue:
            lit = pqueue.popleft()
            for r in idx.sd_by_poslit.get(lit, ()):
                c = pcounts.get(r.key)
                if c is None:
                    c = len(r.pos)
                c -= 1
                pcounts[r.key] = c
                if c == 0 and all(status.get(l) != -1 for l in r.pos):
                    try_fire(r)
        return poss

    def try_plus(q):
        cq = complement(q)
        if cq in plus_delta:
            return False
        support = None
        for r in idx.sd_by_head.get(q, ()):
            if applicable(r):
                support = r
                break
        if support is None:
            return False
        defeated = []
        for s in idx.all_by_head.get(cq, ()):
            if discarded(s):
                continue
            for t in idx.all_by_head.get(q, ()):
                if (t.key[0], s.key[0]) in overrides and applicable(t):
                    defeated.append((s.key, t.key))
                    break
            else:
                return False
        status[q] = 1
        psupport[q] = (support.key, tuple(defeated))
        return True

    def try_minus(q):
        if q in plus_delta:
            return False
        cq = complement(q)
        if cq in plus_delta:
            status[q] = -1
            return True
        supporters = idx.sd_by_head.get(q, ())
        if all(discarded(r) for r in supporters):
            status[q] = -1
            return True
        defenders = idx.all_by_head.get(q, ())
        for s in idx.all_by_head.get(cq, ()):
            if not applicable(s):
                continue
            if all(
                discarded(t) or (t.key[0], s.key[0]) not in overrides
                for t in defenders
            ):
                status[q] = -1
                return True
        return False

    maybe = possible()
    unresolved = {l for l in maybe if l not in status}
    while True:
        progress = True
        while progress:
            progress = False
            for q in sorted(unresolved):
                if try_plus(q) or try_minus(q):
                    unresolved.discard(q)
                    progress = True
        new_maybe = possible()
        dropped = [l for l in unresolved if l not in new_maybe]
        maybe = new_maybe
        if not dropped:
            break
        for l in dropped:
            status[l] = -1
            unresolved.discard(l)
    # remaining unresolved literals are attack deadlocks: their +d clause
    # never fired at the fixpoint, so they are swept to -d (left untagged).

    plus_partial = frozenset(l for l, s in status.items() if s == 1)

    inconsistencies = tuple(
        sorted(
            (lit, complement(lit))
            for lit in plus_partial
            if not lit[2] and complement(lit) in plus_partial
        )
    )

    pred_arity = dict(idx.pred_arity_base)
    universe = set(idx.universe_base)
    for pred, args, _ in extras:
        pred_arity.setdefault(pred, len(args))
        universe.update(args)

    return ConclusionSet(
        vocab=frozenset(vocab),
        plus_delta=frozenset(plus_delta),
        plus_partial=plus_partial,
        inconsistencies=inconsistencies,
        universe=frozenset(universe),
        pred_arity=pred_arity,
        delta_support=delta_support,
        partial_support=psupport,
    )


def query(cs: ConclusionSet, lit) -> set:
    """Return the proof tags recorded for ``lit`` (engine tuple form)."""
    if lit not in cs.vocab:
        pred, args, _ = lit
        if cs.pred_arity.get(pred) != len(args) or not set(args) <= cs.universe:
            raise UnknownLiteralError(
                f"literal outside the grounding vocabulary: {format_ground_literal(lit)}"
            )
    return cs.tags(lit)


# ---------------------------------------------------------------------------
# proof trees


@dataclass(frozen=True)
class ProofTree:
    literal: tuple
    tag: str
    rule: str  # "fact", "naf", or a ground rule id
    children: tuple = ()
    defeated_attackers: tuple = ()  # (attacker id, defeater id) pairs


def explain(gp: GroundProgram, cs: ConclusionSet, lit) -> ProofTree:
    """Justify the strongest positive tag of ``lit`` as a finite tree."""
    idx = _get_index(gp.rules)

    def build_delta(l):
        support = cs.delta_support[l]
        if support == "fact":
            return ProofTree(l, "+D", "fact")
        rule = idx.rules_by_key[support]
        return ProofTree(
            l, "+D", _format_key(support), tuple(build_delta(b) for b in rule.pos)
        )

    def build(l):
        if l in cs.plus_delta:
            return build_delta(l)
        if l not in cs.plus_partial:
            raise NotProvableError(
                f"no positive tag for {format_ground_literal(l)}"
            )
        support, defeated = cs.partial_support[l]
        rule = idx.rules_by_key[support]
        children = [build(b) for b in rule.pos]
        children += [ProofTree(t, "-d", "naf") for t in rule.nafs]
        return ProofTree(
            l,
            "+d",
            _format_key(support),
            tuple(children),
            tuple((_format_key(s), _format_key(t)) for s, t in defeated),
        )

    if lit not in cs.plus_delta and lit not in cs.plus_partial:
        raise NotProvableError(f"no positive tag for {format_ground_literal(lit)}")
    return build(lit)


# ---------------------------------------------------------------------------
# exports


def export_conclusions(cs: ConclusionSet) -> str:
    """Line-oriented conclusion dump, sorted lexicographically."""
    lines = []
    for lit in cs.vocab:
        text = format_ground_literal(lit)
        for tag in cs.tags(lit):
            lines.append(f"{tag} {text}")
    return "\n".join(sorted(lines)) + "\n" if lines else ""


def export_proof_tree(tree: ProofTree) -> str:
    """Indented text rendering, two spaces per depth level."""
    lines = []

    def render(node, depth):
        pad = "  " * depth
        lines.append(f"{pad}{node.tag} {format_ground_literal(node.literal)} <- {node.rule}")
        for attacker, defeater in node.defeated_attackers:
            lines.append(f"{pad}  defeated {attacker} by {defeater}")
        for child in node.children:
            render(child, depth + 1)

    render(tree, 0)
    return "\n".join(lines) + "\n"
