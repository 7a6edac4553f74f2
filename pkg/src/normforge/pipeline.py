"""Staged compliance evaluation in the statutory order 112 -> 102/103 -> 101.

Each stage restricts the rulebase to the norms of its provisions (plus the
shared "common" definitions), translates them at the evaluation date, runs
the engine against the reference set's facts and checks whether the stage
goal is defeasibly provable for the claim under test.  A failing stage
gates everything after it: later stages are skipped, the claim is not
eligible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date

from . import engine
from .errors import NormforgeError, PipelineError
from .facts import FactBase, ReferenceSet, close_taxonomy, ground_atoms
from .rules import Rulebase, translate_to_core, stratify, validate_rulebase

__all__ = [
    "ComplianceReport",
    "StageResult",
    "StageSpec",
    "default_stages",
    "report_to_json",
    "run_pipeline",
]

COMMON_SOURCE = "common"


@dataclass(frozen=True)
class StageSpec:
    stage_id: str
    goal_predicate: str
    provision_filter: tuple[str, ...]


def default_stages() -> list[StageSpec]:
    """The statutory stage order for the US: 112, then 102/103, then 101."""
    return [
        StageSpec("S112", "compliant_112", ("35 USC §112",)),
        StageSpec("S102_103", "patentable_102_103", ("35 USC §102", "35 USC §103")),
        StageSpec("S101", "eligible_101", ("35 USC §101",)),
    ]


@dataclass(frozen=True)
class StageResult:
    stage_id: str
    status: str  # passed | failed | skipped
    goal: str | None = None
    tags: tuple = ()
    proof: engine.ProofTree | None = None


@dataclass(frozen=True)
class ComplianceReport:
    claim: str
    as_of: date
    stages: tuple[StageResult, ...]
    inconsistencies: tuple[str, ...]
    eligible: bool


def _stage_constant(stage_id: str) -> str:
    return stage_id.lower()


def _select_norms(rb: Rulebase, stage: StageSpec) -> Rulebase:
    norms = tuple(
        n
        for n in rb.norms
        if n.source == COMMON_SOURCE
        or any(n.source.startswith(prefix) for prefix in stage.provision_filter)
    )
    ids = {n.rule.id for n in norms}
    overrides = frozenset(
        (sup, inf) for sup, inf in rb.overrides if sup in ids and inf in ids
    )
    return Rulebase(norms, overrides, rb.jurisdiction)


def run_pipeline(
    rb: Rulebase, rs: ReferenceSet, as_of: date, plan: list[StageSpec]
) -> ComplianceReport:
    """Evaluate the staged plan and assemble a gated compliance report."""
    if not plan:
        raise PipelineError("stage plan must not be empty")
    seen = set()
    for stage in plan:
        if stage.stage_id in seen:
            raise PipelineError(f"duplicate stage id {stage.stage_id!r}")
        seen.add(stage.stage_id)
    violations = validate_rulebase(rb)
    if violations:
        raise PipelineError(
            "rulebase does not validate: " + "; ".join(map(str, violations))
        )

    closure = close_taxonomy(rs.taxonomy, rs.concept_ids())
    base_facts = ground_atoms(rs, closure)
    claim = rs.patent.claim_id

    results = []
    inconsistencies = []
    passed_stages = []
    failed = False
    for stage in plan:
        if failed:
            results.append(StageResult(stage.stage_id, "skipped"))
            continue
        cp = translate_to_core(_select_norms(rb, stage), as_of)
        try:
            stratify(cp)
        except NormforgeError as exc:
            raise PipelineError(
                f"stage {stage.stage_id}: {exc}", stage=stage.stage_id
            ) from exc
        atoms = set(base_facts.atoms)
        for prior in passed_stages:
            atoms.add(("stage_passed", (_stage_constant(prior), claim)))
        gp = engine.ground(cp, FactBase(frozenset(atoms)))
        goal = (stage.goal_predicate, (claim,), False)
        cs = engine.infer(gp, vocabulary=[goal])
        tags = tuple(sorted(cs.tags(goal)))
        for q, cq in cs.inconsistencies:
            for lit in (q, cq):
                text = engine.format_ground_literal(lit)
                if text not in inconsistencies:
                    inconsistencies.append(text)
        ok = "+d" in tags
        proof = engine.explain(gp, cs, goal) if ok else None
        results.append(
            StageResult(
                stage.stage_id,
                "passed" if ok else "failed",
                engine.format_ground_literal(goal),
                tags,
                proof,
            )
        )
        if ok:
            passed_stages.append(stage.stage_id)
        else:
            failed = True

    return ComplianceReport(
        claim=claim,
        as_of=as_of,
        stages=tuple(results),
        inconsistencies=tuple(sorted(inconsistencies)),
        eligible=not failed,
    )


# ---------------------------------------------------------------------------
# canonical report serialization


def _proof_to_obj(tree: engine.ProofTree):
    obj = {
        "literal": engine.format_ground_literal(tree.literal),
        "tag": tree.tag,
        "rule": tree.rule,
    }
    if tree.defeated_attackers:
        obj["defeated"] = [list(pair) for pair in tree.defeated_attackers]
    if tree.children:
        obj["children"] = [_proof_to_obj(c) for c in tree.children]
    return obj


def report_to_json(report: ComplianceReport) -> bytes:
    """Canonical UTF-8 JSON rendering; byte-identical for identical reports."""
    stages = []
    for result in report.stages:
        obj = {"stage": result.stage_id, "status": result.status}
        if result.status != "skipped":
            obj["goal"] = result.goal
            obj["tags"] = list(result.tags)
        if result.proof is not None:
            obj["proof"] = _proof_to_obj(result.proof)
        stages.append(obj)
    doc = {
        "claim": report.claim,
        "as_of": report.as_of.isoformat(),
        "stages": stages,
        "inconsistencies": list(report.inconsistencies),
        "eligible": report.eligible,
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
