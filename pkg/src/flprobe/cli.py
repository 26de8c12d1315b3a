"""Command-line entry point.

Each verb is a thin adapter over one module: parse, skeleton, retrieve,
prompt, execute, link, run, report. Machine-readable output goes to stdout,
diagnostics to stderr. Exit codes: 0 success, 1 usage error, 2 data or
validation error, 3 backend error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness, prompts
from .executor import ExecutionError, execute
from .gateway import BackendError
from .kb import KbError, load_kb
from .kopl_ast import parse_kopl, serialize_kopl
from .linking import LinkError, build_name_index, link, load_vocabulary, two_hop_context
from .programs import LANGUAGES, PARSE_ERRORS, parse_program
from .retrieval import RetrievalError, select_lf_demos, select_nlq_demos
from .skeletons import mask_nlq, skeleton_of

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3

DATA_ERRORS = PARSE_ERRORS + (
    KbError,
    ExecutionError,
    LinkError,
    RetrievalError,
    harness.ConfigError,
    harness.IngestError,
    FileNotFoundError,
    json.JSONDecodeError,
    KeyError,
    ValueError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8").strip()


def _emit(payload, out: str | None) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _build_parser() -> _Parser:
    parser = _Parser(prog="flprobe", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("parse", help="parse a logical form and print its AST")
    p.add_argument("--language", choices=LANGUAGES, required=True)
    p.add_argument("--input", required=True, help="file with the LF text, or - for stdin")
    p.add_argument("--sexpr", help="companion S-expression file (sparql only)")
    p.add_argument("--out")

    p = sub.add_parser("skeleton", help="print the structure-only skeleton of a program")
    p.add_argument("--language", choices=LANGUAGES, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--sexpr")
    p.add_argument("--out")

    p = sub.add_parser("mask", help="mask entity spans in a question")
    p.add_argument("--question", required=True)
    p.add_argument("--span", action="append", default=[])
    p.add_argument("--out")

    p = sub.add_parser("retrieve", help="select demonstrations for a target")
    p.add_argument("--task", choices=("understanding", "generation"), required=True)
    p.add_argument("--dataset-kind", choices=harness.DATASET_KINDS, required=True)
    p.add_argument("--seeds", required=True, help="seed dataset file")
    p.add_argument("--target", required=True, help="target LF file (understanding) or question text file (generation)")
    p.add_argument("--sexpr")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out")

    p = sub.add_parser("prompt", help="assemble a prompt for a target")
    p.add_argument("--task", choices=prompts.DEFAULT_TEMPLATES.keys() | {"zero_shot_understanding"}, required=True)
    p.add_argument("--dataset-kind", choices=harness.DATASET_KINDS)
    p.add_argument("--seeds")
    p.add_argument("--target", required=True)
    p.add_argument("--sexpr")
    p.add_argument("--language", choices=LANGUAGES, required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out")

    p = sub.add_parser("execute", help="run a KoPL program over a KB")
    p.add_argument("--kb", required=True)
    p.add_argument("--program", required=True, help="program text file, or - for stdin")
    p.add_argument("--out")

    p = sub.add_parser("link", help="link a generated name against a vocabulary")
    p.add_argument("--vocab", required=True, help="JSONL vocabulary file")
    p.add_argument("--name", required=True)
    p.add_argument("--kind", choices=("entity", "relation", "concept"))
    p.add_argument("--out")

    p = sub.add_parser("two-hop", help="names within two relation hops of an entity")
    p.add_argument("--kb", required=True)
    p.add_argument("--entity", required=True)
    p.add_argument("--out")

    p = sub.add_parser("run", help="run a probing experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--task", choices=harness.TASKS)
    p.add_argument("--language", choices=LANGUAGES)
    p.add_argument("--k", type=int)
    p.add_argument("--seed-ratio", type=float)
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--backend")
    p.add_argument("--entity-linking", action="store_true", default=None)
    p.add_argument("--kb")
    p.add_argument("--vocab")
    p.add_argument("--out", help="output directory (overrides config out_dir)")

    p = sub.add_parser("report", help="re-render a report JSON as markdown")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _cmd_parse(args) -> None:
    text = _read_text(args.input)
    sexpr = _read_text(args.sexpr) if args.sexpr else None
    program = parse_program(args.language, text, sexpr=sexpr)
    if args.language == "kopl":
        payload = {
            "language": args.language,
            "functions": [
                {"function": fn.name, "inputs": list(fn.args), "dependencies": list(fn.deps)}
                for fn in program.body.functions
            ],
        }
    elif args.language == "sparql":
        payload = {
            "language": args.language,
            "select_var": program.body.select_var,
            "triples": [list(t) for t in program.body.triples],
            "values": program.body.values_bindings,
            "filters": program.body.filters,
        }
    else:
        payload = {"language": args.language, "canonical": program.source_text}
    _emit(payload, args.out)


def _cmd_skeleton(args) -> None:
    text = _read_text(args.input)
    sexpr = _read_text(args.sexpr) if args.sexpr else None
    program = parse_program(args.language, text, sexpr=sexpr)
    _emit(skeleton_of(program).text, args.out)


def _cmd_mask(args) -> None:
    masked = mask_nlq(args.question, args.span)
    _emit(
        {
            "text": masked.text,
            "placeholders": dict(masked.placeholder_map),
            "unmatched": list(masked.unmatched),
        },
        args.out,
    )


def _load_seeds(kind: str, path: str):
    result = harness.ingest(kind, path)
    if result.skipped:
        print(f"skipped {len(result.skipped)} unparseable record(s)", file=sys.stderr)
    return harness.make_seed_set(result.records)


def _cmd_retrieve(args) -> None:
    seeds = _load_seeds(args.dataset_kind, args.seeds)
    target_text = _read_text(args.target)
    if args.task == "understanding":
        sexpr = _read_text(args.sexpr) if args.sexpr else None
        program = parse_program(seeds.language, target_text, sexpr=sexpr)
        demos = select_lf_demos(program, seeds, args.k)
    else:
        demos = select_nlq_demos(target_text, [], seeds, args.k)
    _emit(
        [
            {"id": d.id, "question": d.question, "lf": d.program.source_text}
            for d in demos
        ],
        args.out,
    )


def _cmd_prompt(args) -> None:
    target_text = _read_text(args.target)
    if args.task == "zero_shot_understanding":
        prompt = prompts.build_zero_shot_prompt(target_text, language=args.language)
        _emit(prompt.text, args.out)
        return
    if not args.seeds or not args.dataset_kind:
        raise UsageError("--seeds and --dataset-kind are required for few-shot prompts")
    seeds = _load_seeds(args.dataset_kind, args.seeds)
    if args.task == "understanding":
        sexpr = _read_text(args.sexpr) if args.sexpr else None
        program = parse_program(args.language, target_text, sexpr=sexpr)
        demos = select_lf_demos(program, seeds, args.k) if args.k else []
        pairs = [
            (harness._understanding_lf_text(d.program), d.question) for d in demos
        ]
        lf_text = harness._understanding_lf_text(program)
        prompt = prompts.build_understanding_prompt(lf_text, pairs, args.language)
    else:
        demos = select_nlq_demos(target_text, [], seeds, args.k) if args.k else []
        pairs = [(d.question, harness._generation_lf_text(d.program)) for d in demos]
        prompt = prompts.build_generation_prompt(target_text, pairs, args.language)
    _emit(prompt.text, args.out)


def _cmd_execute(args) -> None:
    kb = load_kb(args.kb)
    program = parse_kopl(_read_text(args.program))
    answer = execute(program, kb)
    payload = {"kind": answer.kind, "answer": answer.render()}
    if answer.kind == "names":
        payload["names"] = list(answer.payload)
    _emit(payload, args.out)


def _cmd_link(args) -> None:
    index = build_name_index(load_vocabulary(args.vocab))
    kb_id, score = link(index, args.name, kind=args.kind)
    _emit({"id": kb_id, "score": score}, args.out)


def _cmd_two_hop(args) -> None:
    kb = load_kb(args.kb)
    _emit(two_hop_context(kb, args.entity), args.out)


def _cmd_run(args) -> None:
    config = harness.RunConfig.from_file(args.config)
    overrides = {
        "task": args.task,
        "language": args.language,
        "k": args.k,
        "seed_ratio": args.seed_ratio,
        "rng_seed": args.rng_seed,
        "backend": args.backend,
        "entity_linking": args.entity_linking,
        "kb_path": args.kb,
        "vocab_path": args.vocab,
        "out_dir": args.out,
    }
    merged = config.to_dict()
    merged.update({k: v for k, v in overrides.items() if v is not None})
    config = harness.RunConfig.from_dict(merged)
    if not config.dataset_kind or not config.dataset_path:
        raise harness.ConfigError("config must name dataset_kind and dataset_path")

    records = harness.ingest(config.dataset_kind, config.dataset_path).records
    seeds = harness.sample_seed(records, config.seed_ratio, config.rng_seed)
    targets = records
    if config.targets_path:
        targets = harness.ingest(config.dataset_kind, config.targets_path).records
    if config.max_targets:
        targets = targets[: config.max_targets]

    kb = load_kb(config.kb_path) if config.kb_path else None
    name_index = (
        build_name_index(load_vocabulary(config.vocab_path)) if config.vocab_path else None
    )

    out_dir = Path(config.out_dir)
    if config.sweep is not None:
        report = harness.run_sweep(config, seeds, targets, name_index=name_index, kb=kb)
    elif config.task in ("understanding", "zero_shot_understanding"):
        pseudo, report = harness.run_understanding(config, seeds, targets)
        harness.write_pseudo_dataset(pseudo, out_dir / "pseudo_dataset.jsonl")
    else:
        report = harness.run_generation(config, seeds, targets, name_index=name_index, kb=kb)
    paths = harness.emit_report(report, out_dir)
    print(json.dumps({"aggregates": report.aggregates(),
                      "outputs": {k: str(v) for k, v in paths.items()}}, sort_keys=True))


def _cmd_report(args) -> None:
    with open(args.input, encoding="utf-8") as handle:
        raw = json.load(handle)
    report = harness.ExperimentReport(
        task=raw["task"],
        language=raw["language"],
        rows=[harness.Row(**row) for row in raw.get("rows", ())],
        sweep=[harness.SweepCell(**cell) for cell in raw.get("sweep", ())],
        config=raw.get("config", {}),
    )
    paths = harness.emit_report(report, args.out, formats=("md",))
    print(paths["md"])


_COMMANDS = {
    "parse": _cmd_parse,
    "skeleton": _cmd_skeleton,
    "mask": _cmd_mask,
    "retrieve": _cmd_retrieve,
    "prompt": _cmd_prompt,
    "execute": _cmd_execute,
    "link": _cmd_link,
    "two-hop": _cmd_two_hop,
    "run": _cmd_run,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _COMMANDS[args.verb](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
