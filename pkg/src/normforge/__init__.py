"""normforge: defeasible rule reasoning over formalized patent facts.

Parse discretized patent facts (elements / attributes / concepts) and
LRML-S legal norms, translate time-valid norms to an executable rule
core, infer four-valued defeasible verdicts with proof trees, run the
staged 112 -> 102/103 -> 101 compliance pipeline, and manage the norm
base over time in a versioned store.
"""

from .engine import (
    ConclusionSet,
    GroundProgram,
    ProofTree,
    explain,
    export_conclusions,
    export_proof_tree,
    ground,
    infer,
    query,
)
from .errors import (
    FactFileError,
    NormforgeError,
    NormParseError,
    NotProvableError,
    PipelineError,
    StoreError,
    StratificationError,
    TaxonomyCycleError,
    UnknownLiteralError,
)
from .facts import (
    Annotation,
    Attribute,
    Element,
    FactBase,
    ReferenceSet,
    TechnicalTeaching,
    Violation,
    close_taxonomy,
    ground_atoms,
    parse_fact_file,
    serialize_fact_file,
    validate_discretization,
)
from .lifecycle import AddNorm, AmendNorm, RepealNorm, VersionedStore
from .pipeline import ComplianceReport, StageSpec, default_stages, report_to_json, run_pipeline
from .rules import (
    Atom,
    BodyLiteral,
    CoreProgram,
    Literal,
    Norm,
    Rule,
    Rulebase,
    Term,
    parse_core,
    parse_literal,
    parse_lrmls,
    serialize_core,
    serialize_lrmls,
    stratify,
    translate_to_core,
    validate_rulebase,
)

__version__ = "0.1.0"
