"""Command-line surface: validate, infer, pipeline, explain, kb.

Exit codes: 0 success; 1 verdict-negative (the pipeline ran and the claim
is not eligible, or the queried goal is not provable); 2 input or
validation error; 3 internal invariant breach.  Machine output goes to
stdout (or --report); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date

from . import engine, lifecycle, pipeline
from .errors import NormforgeError, NotProvableError
from .facts import parse_fact_file, validate_discretization
from .lifecycle import VersionedStore, op_from_obj, op_to_obj
from .rules import (
    parse_literal,
    parse_lrmls,
    serialize_lrmls,
    stratify,
    translate_to_core,
    validate_rulebase,
)

EXIT_OK = 0
EXIT_VERDICT_NEGATIVE = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL = 3


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(f"{message}\n{self.format_usage()}")


def _build_parser():
    parser = _Parser(prog="normforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_inputs(p):
        p.add_argument("facts", help="fact file (JSON)")
        p.add_argument("norms", help="norm file (LRML-S XML)")

    def add_common(p, as_of=True):
        if as_of:
            p.add_argument("--as-of", dest="as_of", metavar="DATE", default=None)
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("validate", help="validate a fact file and a rulebase")
    add_inputs(p)
    add_common(p, as_of=False)

    p = sub.add_parser("infer", help="print the full conclusion set")
    add_inputs(p)
    add_common(p)

    p = sub.add_parser("pipeline", help="run the staged compliance pipeline")
    add_inputs(p)
    add_common(p)
    p.add_argument("--report", metavar="FILE", default=None)

    p = sub.add_parser("explain", help="print the proof tree for a goal literal")
    add_inputs(p)
    add_common(p)
    p.add_argument("--goal", required=True, metavar="LITERAL")

    p = sub.add_parser("kb", help="versioned norm store operations")
    kb = p.add_subparsers(dest="kb_command", metavar="OP")

    def add_store(q):
        q.add_argument("--store", metavar="FILE", default=None)
        q.add_argument("--format", choices=("text", "json"), default="text")

    q = kb.add_parser("commit", help="apply a changeset file")
    q.add_argument("changeset", help="changeset file (JSON, {'ops': [...]})")
    add_store(q)
    q = kb.add_parser("as-of", help="snapshot the store at a date")
    q.add_argument("date")
    add_store(q)
    q = kb.add_parser("diff", help="changeset between two versions")
    q.add_argument("v1", type=int)
    q.add_argument("v2", type=int)
    add_store(q)
    q = kb.add_parser("trace", help="provenance chain of a norm")
    q.add_argument("norm_id")
    add_store(q)
    return parser


def _read(path):
    with open(path, "rb") as handle:
        return handle.read()


def _parse_as_of(value):
    if value is None:
        return date.today()
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise NormforgeError(f"invalid --as-of date: {value!r}") from None


def _load_core(args):
    rs = parse_fact_file(_read(args.facts))
    rb = parse_lrmls(_read(args.norms))
    return rs, rb


def _run_validate(args, out, err):
    status = EXIT_OK
    records = []
    rs = parse_fact_file(_read(args.facts))
    for v in validate_discretization(rs):
        records.append(("facts", v.subject, v.message))
    rb = parse_lrmls(_read(args.norms))
    for v in validate_rulebase(rb):
        records.append(("norms", v.subject, v.message))
    if records:
        status = EXIT_INPUT_ERROR
    if args.format == "json":
        out.write(
            json.dumps(
                [{"input": i, "subject": s, "message": m} for i, s, m in records],
                indent=2,
            )
            + "\n"
        )
    else:
        for source, subject, message in records:
            out.write(f"{source} {subject}: {message}\n")
        if not records:
            out.write("ok\n")
    return status


def _infer_setup(args):
    from .facts import close_taxonomy, ground_atoms

    rs, rb = _load_core(args)
    as_of = _parse_as_of(args.as_of)
    violations = validate_rulebase(rb)
    if violations:
        raise NormforgeError(
            "rulebase does not validate: " + "; ".join(map(str, violations))
        )
    cp = translate_to_core(rb, as_of)
    stratify(cp)
    closure = close_taxonomy(rs.taxonomy, rs.concept_ids())
    fb = ground_atoms(rs, closure)
    gp = engine.ground(cp, fb)
    return rs, rb, as_of, gp


def _run_infer(args, out, err):
    _, _, _, gp = _infer_setup(args)
    cs = engine.infer(gp)
    if args.format == "json":
        records = [
            {"tag": line.split(" ", 1)[0], "literal": line.split(" ", 1)[1]}
            for line in engine.export_conclusions(cs).splitlines()
        ]
        out.write(json.dumps(records, indent=2) + "\n")
    else:
        out.write(engine.export_conclusions(cs))
    return EXIT_OK


def _run_pipeline(args, out, err):
    rs, rb = _load_core(args)
    as_of = _parse_as_of(args.as_of)
    report = pipeline.run_pipeline(rb, rs, as_of, pipeline.default_stages())
    payload = pipeline.report_to_json(report)
    if args.report:
        with open(args.report, "wb") as handle:
            handle.write(payload)
    else:
        out.write(payload.decode("utf-8"))
    if args.format == "text":
        for result in report.stages:
            line = f"{result.stage_id}: {result.status}"
            if result.tags:
                line += f" ({' '.join(result.tags)})"
            err.write(line + "\n")
        err.write(f"eligible: {'true' if report.eligible else 'false'}\n")
    return EXIT_OK if report.eligible else EXIT_VERDICT_NEGATIVE


def _run_explain(args, out, err):
    _, _, _, gp = _infer_setup(args)
    goal = engine.literal_to_tuple(parse_literal(args.goal))
    cs = engine.infer(gp, vocabulary=[goal])
    engine.query(cs, goal)
    tree = engine.explain(gp, cs, goal)
    if args.format == "json":
        from .pipeline import _proof_to_obj

        out.write(json.dumps(_proof_to_obj(tree), indent=2) + "\n")
    else:
        out.write(engine.export_proof_tree(tree))
    return EXIT_OK


def _open_store(args):
    path = args.store or os.environ.get("NORMFORGE_STORE")
    if not path:
        raise NormforgeError("no store given: use --store or set NORMFORGE_STORE")
    return VersionedStore.open(path)


def _run_kb(args, out, err):
    store = _open_store(args)
    if store.corruption:
        err.write(store.corruption + "; store opened read-only\n")
    cmd = args.kb_command
    if cmd == "commit":
        with open(args.changeset, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
        ops = [op_from_obj(o) for o in doc.get("ops", [])]
        version = store.commit(ops)
        if args.format == "json":
            out.write(json.dumps({"version": version}) + "\n")
        else:
            out.write(f"version {version}\n")
        return EXIT_OK
    if cmd == "as-of":
        snapshot = store.as_of(date.fromisoformat(args.date))
        if args.format == "json":
            out.write(
                json.dumps(
                    {"norms": [lifecycle._norm_to_obj(n) for n in snapshot.norms]},
                    indent=2,
                    ensure_ascii=False,
                )
                + "\n"
            )
        else:
            out.write(serialize_lrmls(snapshot).decode("utf-8"))
        return EXIT_OK
    if cmd == "diff":
        ops = store.diff(args.v1, args.v2)
        objs = [op_to_obj(op) for op in ops]
        if args.format == "json":
            out.write(json.dumps({"ops": objs}, indent=2, ensure_ascii=False) + "\n")
        else:
            for obj in objs:
                out.write(json.dumps(obj, ensure_ascii=False) + "\n")
        return EXIT_OK
    if cmd == "trace":
        chain = store.trace(args.norm_id)
        if args.format == "json":
            out.write(
                json.dumps(
                    {
                        "norm": chain.norm_id,
                        "events": [
                            {"version": v, "op": k, "citation": c}
                            for v, k, c in chain.events
                        ],
                        "predecessor": chain.predecessor,
                        "successor": chain.successor,
                    },
                    indent=2,
                    ensure_ascii=False,
                )
                + "\n"
            )
        else:
            for version, kind, citation in chain.events:
                out.write(f"v{version} {kind} {citation}\n")
            if chain.predecessor:
                out.write(f"predecessor {chain.predecessor}\n")
            if chain.successor:
                out.write(f"successor {chain.successor}\n")
        return EXIT_OK
    raise _ArgumentError("kb requires one of: commit, as-of, diff, trace")


def dispatch(argv, stdout=None, stderr=None) -> int:
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _ArgumentError(parser.format_usage())
        handler = {
            "validate": _run_validate,
            "infer": _run_infer,
            "pipeline": _run_pipeline,
            "explain": _run_explain,
            "kb": _run_kb,
        }[args.command]
        return handler(args, out, err)
    except _ArgumentError as exc:
        err.write(str(exc) + "\n")
        return EXIT_INPUT_ERROR
    except NotProvableError as exc:
        err.write(f"not provable: {exc}\n")
        return EXIT_VERDICT_NEGATIVE
    except (NormforgeError, OSError, json.JSONDecodeError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT_ERROR
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except Exception as exc:  # pragma: no cover - invariant breach
        err.write(f"internal error: {exc!r}\n")
        return EXIT_INTERNAL


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
