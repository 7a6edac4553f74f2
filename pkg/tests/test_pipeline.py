"""Unit tests for the staged compliance pipeline and its report format."""

import json
from datetime import date
from pathlib import Path

import pytest

from normforge.errors import PipelineError
from normforge.facts import parse_fact_file
from normforge.pipeline import (
    StageSpec,
    default_stages,
    report_to_json,
    run_pipeline,
)
from normforge.rules import (
    Atom,
    BodyLiteral,
    Literal,
    Norm,
    Rule,
    Rulebase,
    Term,
    parse_lrmls,
)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture(scope="module")
def sample():
    rs = parse_fact_file((SAMPLES / "teapot_patent.json").read_bytes())
    rb = parse_lrmls((SAMPLES / "us_sample_norms.xml").read_bytes())
    return rs, rb


def test_default_stages_order():
    assert [(s.stage_id, s.goal_predicate) for s in default_stages()] == [
        ("S112", "compliant_112"),
        ("S102_103", "patentable_102_103"),
        ("S101", "eligible_101"),
    ]


def test_sample_verdicts_across_the_repeal(sample):
    rs, rb = sample
    report = run_pipeline(rb, rs, date(2010, 6, 1), default_stages())
    assert [s.status for s in report.stages] == ["passed", "failed", "skipped"]
    assert not report.eligible
    report = run_pipeline(rb, rs, date(2012, 1, 1), default_stages())
    assert [s.status for s in report.stages] == ["passed", "passed", "passed"]
    assert report.eligible
    assert report.claim == "cl1"
    assert report.inconsistencies == ()


def test_plan_validation(sample):
    rs, rb = sample
    with pytest.raises(PipelineError, match="must not be empty"):
        run_pipeline(rb, rs, date(2012, 1, 1), [])
    plan = default_stages() + [default_stages()[0]]
    with pytest.raises(PipelineError, match="duplicate stage id"):
        run_pipeline(rb, rs, date(2012, 1, 1), plan)


def test_invalid_rulebase_is_rejected(sample):
    rs, _ = sample
    bad = Rulebase(
        (
            Norm(
                "n1",
                Rule("r1", "strict", Literal(Atom("p", ())), ()),
                "",  # empty source citation
                "US",
                date(2000, 1, 1),
            ),
        )
    )
    with pytest.raises(PipelineError, match="does not validate"):
        run_pipeline(bad, rs, date(2012, 1, 1), default_stages())


def test_stage_passed_facts_feed_later_stages(sample):
    rs, _ = sample

    def norm(nid, rule, source):
        return Norm(nid, rule, source, "US", date(2000, 1, 1), None)

    first = Rule("r_first", "defeasible", Literal(Atom("go", (Term("Cl"),))),
                 (BodyLiteral(Literal(Atom("teaching", (Term("D"), Term("Cl"))))),))
    second = Rule(
        "r_second",
        "defeasible",
        Literal(Atom("done", (Term("Cl"),))),
        (BodyLiteral(Literal(Atom("stage_passed", (Term("s1"), Term("Cl"))))),),
    )
    rb = Rulebase(
        (norm("n1", first, "35 USC §112"), norm("n2", second, "35 USC §101")),
    )
    plan = [
        StageSpec("S1", "go", ("35 USC §112",)),
        StageSpec("S2", "done", ("35 USC §101",)),
    ]
    report = run_pipeline(rb, rs, date(2012, 1, 1), plan)
    assert [s.status for s in report.stages] == ["passed", "passed"]
    # the second stage goal is provable only through stage_passed(s1, cl1)
    assert report.stages[1].proof.children[0].literal == (
        "stage_passed",
        ("s1", "cl1"),
        False,
    )


def test_report_json_shape(sample):
    rs, rb = sample
    report = run_pipeline(rb, rs, date(2010, 6, 1), default_stages())
    doc = json.loads(report_to_json(report))
    assert list(doc) == ["claim", "as_of", "stages", "inconsistencies", "eligible"]
    assert doc["as_of"] == "2010-06-01"
    skipped = doc["stages"][2]
    assert skipped == {"stage": "S101", "status": "skipped"}
    passed = doc["stages"][0]
    assert passed["goal"] == "compliant_112(cl1)"
    assert passed["tags"] == ["+d", "-D"]
    assert passed["proof"]["literal"] == "compliant_112(cl1)"
    # canonical: serializing twice is byte-identical
    assert report_to_json(report) == report_to_json(report)
