"""Seeded random generators shared by the test suite."""

from datetime import date, timedelta

from normforge.rules import (
    Atom,
    BodyLiteral,
    CoreProgram,
    Literal,
    Norm,
    Rule,
    Rulebase,
    Term,
)
from normforge.facts import Annotation, Attribute, Element, ReferenceSet, TechnicalTeaching

CONSTS = ("a", "b", "c", "d", "e")


def random_ground_program(rng):
    """A small ground program: (rules, overrides, facts) in oracle form.

    Bounds: <= 8 predicates, <= 12 rules, <= 5 constants, <= 2 overrides;
    naf is stratified by a random predicate level assignment and the
    override relation is kept acyclic.
    """
    consts = CONSTS[: rng.randint(1, 5)]
    preds = [(f"p{i}", rng.choice((0, 0, 1))) for i in range(rng.randint(3, 8))]
    level = {p: rng.randint(0, 3) for p, _ in preds}

    def rand_literal(pool):
        p, arity = rng.choice(pool)
        args = tuple(rng.choice(consts) for _ in range(arity))
        return (p, args, rng.random() < 0.3)

    rules = []
    for i in range(rng.randint(1, 12)):
        head_pred = rng.choice(preds)
        head = (
            head_pred[0],
            tuple(rng.choice(consts) for _ in range(head_pred[1])),
            rng.random() < 0.3,
        )
        strength = rng.choices(("strict", "defeasible", "defeater"), (3, 6, 2))[0]
        pos, nafs = [], []
        below = [pq for pq in preds if level[pq[0]] < level[head_pred[0]]]
        not_above = [pq for pq in preds if level[pq[0]] <= level[head_pred[0]]]
        for _ in range(rng.randint(0, 3)):
            if strength != "strict" and below and rng.random() < 0.35:
                nafs.append(rand_literal(below))
            else:
                pos.append(rand_literal(not_above))
        rules.append((f"r{i}", strength, head, tuple(pos), tuple(nafs)))

    facts = set()
    for _ in range(rng.randint(0, 4)):
        p, arity = rng.choice(preds)
        facts.add((p, tuple(rng.choice(consts) for _ in range(arity))))

    complementary = [
        (t[0], s[0])
        for t in rules
        for s in rules
        if t[0] != s[0] and s[2] == (t[2][0], t[2][1], not t[2][2])
    ]
    rng.shuffle(complementary)
    overrides = set()
    for sup, inf in complementary:
        if len(overrides) == 2:
            break
        if (inf, sup) not in overrides and (sup, inf) not in overrides:
            overrides.add((sup, inf))
    return rules, frozenset(overrides), facts


def tuples_to_core(rules, overrides):
    """Convert oracle-form ground rules to a CoreProgram for the engine."""

    def to_literal(lit):
        pred, args, neg = lit
        return Literal(Atom(pred, tuple(Term(a) for a in args)), neg)

    core_rules = []
    for rid, strength, head, pos, nafs in rules:
        body = tuple(BodyLiteral(to_literal(l), False) for l in pos) + tuple(
            BodyLiteral(to_literal(t), True) for t in nafs
        )
        core_rules.append(Rule(rid, strength, to_literal(head), body))
    trace = {r.id: "n_" + r.id for r in core_rules}
    return CoreProgram(tuple(core_rules), frozenset(overrides), trace)


def random_rulebase(rng, jurisdiction="US"):
    """A structurally valid random Rulebase (safe rules, sane dates)."""
    norms = []
    for i in range(rng.randint(1, 8)):
        arity = rng.randint(0, 3)
        head_vars = tuple(Term(f"X{j}") for j in range(arity))
        head = Literal(Atom(f"h{i}", head_vars), rng.random() < 0.3)
        body = []
        if head_vars or rng.random() < 0.7:
            extra = (Term(rng.choice(("x", "y", "z"))),) if rng.random() < 0.5 else ()
            body.append(BodyLiteral(Literal(Atom(f"b{i}", head_vars + extra)), False))
        strength = rng.choices(("strict", "defeasible", "defeater"), (3, 6, 2))[0]
        if strength != "strict" and rng.random() < 0.5:
            target = head_vars[:1] if head_vars and body else (Term("k"),)
            body.append(BodyLiteral(Literal(Atom(f"g{i}", target)), True))
        rule = Rule(f"r{i}", strength, head, tuple(body))
        valid_from = date(2000, 1, 1) + timedelta(days=rng.randint(0, 5000))
        valid_to = None
        if rng.random() < 0.3:
            valid_to = valid_from + timedelta(days=rng.randint(1, 3000))
        norms.append(
            Norm(
                f"n{i}",
                rule,
                rng.choice(("common", "35 USC §101", "35 USC §102", "35 USC §112")),
                jurisdiction,
                valid_from,
                valid_to,
            )
        )
    overrides = set()
    ids = [n.rule.id for n in norms]
    for _ in range(rng.randint(0, 2)):
        sup, inf = rng.choice(ids), rng.choice(ids)
        if sup != inf and (inf, sup) not in overrides:
            overrides.add((sup, inf))
    return Rulebase(tuple(norms), frozenset(overrides), jurisdiction)


def random_reference_set(rng):
    """A structurally valid random ReferenceSet."""
    n_concepts = rng.randint(1, 6)
    concepts = tuple((f"c{i}", f"concept {i}") for i in range(n_concepts))
    cids = [cid for cid, _ in concepts]
    # edges point from lower to higher index, so the taxonomy is acyclic
    taxonomy = tuple(
        (cids[i], cids[j])
        for i in range(n_concepts)
        for j in range(i + 1, n_concepts)
        if rng.random() < 0.25
    )

    def teaching(tag):
        elements = []
        for e in range(rng.randint(0, 3)):
            attrs = tuple(
                Attribute(
                    f"a_{tag}{e}{a}",
                    f"attr {a}",
                    tuple(sorted({rng.choice(cids) for _ in range(rng.randint(0, 2))})),
                )
                for a in range(rng.randint(0, 2))
            )
            elements.append(Element(f"e_{tag}{e}", f"element {e}", attrs))
        return TechnicalTeaching(f"doc_{tag}", f"cl_{tag}", tuple(elements))

    patent = teaching("pat")
    prior = tuple(teaching(f"pri{k}") for k in range(rng.randint(0, 3)))
    docs = [t.doc_id for t in (patent,) + prior]
    disclosures = tuple(
        sorted({(rng.choice(docs), rng.choice(cids)) for _ in range(rng.randint(0, 4))})
    )
    subjects = set(docs) | set(cids)
    for t in (patent,) + prior:
        subjects.add(t.claim_id)
        for e in t.elements:
            subjects.add(e.id)
            for a in e.attributes:
                subjects.add(a.id)
    annotations = []
    seen = set()
    for k in range(rng.randint(0, 4)):
        subject = rng.choice(sorted(subjects))
        kind = rng.choice(("linguistic", "ontological"))
        key = f"k{k}"
        if (subject, kind, key) not in seen:
            seen.add((subject, kind, key))
            annotations.append(Annotation(subject, kind, key, f"v{k}"))
    return ReferenceSet(
        patent=patent,
        prior_art=prior,
        disclosures=disclosures,
        taxonomy=taxonomy,
        annotations=tuple(annotations),
        concepts=concepts,
    )


def simple_norm(i, valid_from, valid_to=None, source="common", strength="defeasible"):
    """A minimal valid norm with its own predicate, for store tests."""
    rule = Rule(f"r{i}", strength, Literal(Atom(f"p{i}", ())), ())
    return Norm(f"n{i}", rule, source, "US", valid_from, valid_to)
