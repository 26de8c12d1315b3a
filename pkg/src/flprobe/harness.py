"""End-to-end experiment harness.

Ingests datasets into canonical records, samples a seed set, runs the
understanding (LF -> question) and generation (question -> LF) probes through
a completion backend, scores the results and emits reproducible reports plus
pseudo-datasets for external parser training.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .executor import Answer, ExecutionError, execute
from .gateway import (
    BackendError,
    CompletionRequest,
    MockOracle,
    RemoteBackend,
    run_many,
)
from .kb import ToyKB
from .kopl_ast import KoplFunction, KoplProgram, serialize_kopl
from .linking import NameIndex, relink_kopl, relink_sparql
from .programs import (
    KOPL,
    LAMBDA_DCS,
    LANGUAGES,
    PARSE_ERRORS,
    SPARQL,
    FormalProgram,
    exact_match,
    parse_program,
)
from .retrieval import SeedExample, SeedSet, select_lf_demos, select_nlq_demos
from .skeletons import mask_nlq, skeleton_of
from .util import normalize_ws, sha256_hex

DATASET_KINDS = ("kqa_pro", "grailqa", "overnight")

TASKS = ("understanding", "generation", "zero_shot_understanding")


class ConfigError(ValueError):
    pass


class IngestError(ValueError):
    pass


# ---------------------------------------------------------------------------
# canonical records and ingestion

@dataclass
class LfText:
    language: str
    text: str
    sexpr: str | None = None
    tagged: str | None = None


@dataclass
class CanonicalRecord:
    id: str
    question: str
    lf: LfText
    entities: list[dict] = field(default_factory=list)
    answer: object | None = None
    qtype: str | None = None


@dataclass
class IngestResult:
    records: list[CanonicalRecord]
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _kqa_program(functions) -> KoplProgram:
    built = []
    for fn in functions:
        deps = tuple(d for d in fn.get("dependencies", ()) if isinstance(d, int) and d >= 0)
        built.append(KoplFunction(name=fn["function"], args=tuple(fn.get("inputs", ())), deps=deps))
    return KoplProgram.from_functions(built)


def _kqa_entities(program: KoplProgram) -> list[dict]:
    names = []
    for fn in program.functions:
        if fn.name == "Find" and fn.args:
            names.append(fn.args[0])
        elif fn.name in ("FilterStr", "QFilterStr") and len(fn.args) > 1:
            names.append(fn.args[1])
    return [{"name": n} for n in dict.fromkeys(names)]


def ingest_kqa_pro(path) -> IngestResult:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    result = IngestResult(records=[])
    for i, doc in enumerate(raw):
        rid = str(doc.get("id", f"kqa-{i:05d}"))
        try:
            program = _kqa_program(doc["program"])
            lf = LfText(
                language=KOPL,
                text=serialize_kopl(program, "dot_chain"),
                tagged=serialize_kopl(program, "tagged"),
            )
        except Exception as exc:
            result.skipped.append((rid, str(exc)))
            continue
        result.records.append(
            CanonicalRecord(
                id=rid,
                question=doc["question"],
                lf=lf,
                entities=_kqa_entities(program),
                answer=doc.get("answer"),
                qtype=doc.get("qtype"),
            )
        )
    return result


def ingest_grailqa(path) -> IngestResult:
    with open(path, encoding="utf-8") as handle:
        raw = json.load(handle)
    result = IngestResult(records=[])
    for i, doc in enumerate(raw):
        rid = str(doc.get("qid", f"grail-{i:05d}"))
        sparql = doc.get("sparql_query", "")
        sexpr = doc.get("s_expression")
        try:
            parse_program(SPARQL, sparql, sexpr=sexpr)
        except PARSE_ERRORS as exc:
            result.skipped.append((rid, str(exc)))
            continue
        entities = [
            {"name": node.get("friendly_name", node["id"]), "kb_id": node["id"]}
            for node in doc.get("graph_query", {}).get("nodes", ())
            if node.get("node_type") == "entity"
        ]
        result.records.append(
            CanonicalRecord(
                id=rid,
                question=doc["question"],
                lf=LfText(language=SPARQL, text=sparql, sexpr=sexpr),
                entities=entities,
                answer=doc.get("answer"),
                qtype=doc.get("level"),
            )
        )
    return result


def ingest_overnight(path) -> IngestResult:
    result = IngestResult(records=[])
    with open(path, encoding="utf-8") as handle:
        for i, line in enumerate(handle):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            rid = f"ovn-{i:05d}"
            parts = line.split("\t")
            if len(parts) != 2:
                result.skipped.append((rid, "expected two tab-separated fields"))
                continue
            question, lf_text = parts
            try:
                parse_program(LAMBDA_DCS, lf_text)
            except PARSE_ERRORS as exc:
                result.skipped.append((rid, str(exc)))
                continue
            result.records.append(
                CanonicalRecord(
                    id=rid,
                    question=question,
                    lf=LfText(language=LAMBDA_DCS, text=lf_text),
                )
            )
    return result


_INGESTERS = {
    "kqa_pro": ingest_kqa_pro,
    "grailqa": ingest_grailqa,
    "overnight": ingest_overnight,
}


def ingest(kind: str, path) -> IngestResult:
    if kind not in _INGESTERS:
        raise IngestError(f"unknown dataset kind: {kind!r} (expected one of {DATASET_KINDS})")
    return _INGESTERS[kind](path)


# ---------------------------------------------------------------------------
# seed sets

def _parse_record(record: CanonicalRecord) -> FormalProgram:
    return parse_program(record.lf.language, record.lf.text, sexpr=record.lf.sexpr)


def mask_spans(record: CanonicalRecord, program: FormalProgram) -> list[str]:
    """Surface spans to mask in the question: annotated entities plus, for
    KoPL, relation surfaces taken from the gold program arguments."""
    spans = [e["name"] for e in record.entities]
    if program.language == KOPL:
        spans.extend(
            fn.args[0] for fn in program.body.functions if fn.name == "Relate" and fn.args
        )
    return list(dict.fromkeys(spans))


def make_seed(record: CanonicalRecord) -> SeedExample:
    program = _parse_record(record)
    return SeedExample(
        id=record.id,
        question=record.question,
        program=program,
        skeleton=skeleton_of(program),
        nlq_skeleton=mask_nlq(record.question, mask_spans(record, program)),
        answer=record.answer,
    )


def make_seed_set(records) -> SeedSet:
    return SeedSet([make_seed(r) for r in records])


def sample_seed(records, ratio: float, rng_seed: int) -> SeedSet:
    """floor(ratio * n) records drawn uniformly without replacement."""
    records = list(records)
    if not 0 < ratio <= 1:
        raise ConfigError(f"seed ratio must be in (0, 1]: {ratio}")
    count = math.floor(ratio * len(records))
    if count < 1:
        raise ConfigError(f"seed sample of {len(records)} records at ratio {ratio} is empty")
    sampled = random.Random(rng_seed).sample(records, count)
    return make_seed_set(sampled)


# ---------------------------------------------------------------------------
# run configuration

@dataclass
class SweepGrid:
    k_values: list[int] = field(default_factory=lambda: [0, 5, 10, 15, 20, 25, 30, 35])
    linking: list[bool] = field(default_factory=lambda: [False, True])
    runs: int = 1


@dataclass
class RunConfig:
    task: str = "generation"
    language: str = KOPL
    k: int = 3
    seed_ratio: float = 1.0
    rng_seed: int = 0
    entity_linking: bool = False
    backend: str = "mock:echo_gold"
    dataset_kind: str | None = None
    dataset_path: str | None = None
    targets_path: str | None = None
    kb_path: str | None = None
    vocab_path: str | None = None
    max_targets: int | None = None
    mask_prompt_target: bool = True
    most_similar_last: bool = True
    max_in_flight: int = 1
    out_dir: str = "."
    sweep: SweepGrid | None = None
    remote: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ConfigError(f"unknown task: {self.task!r}")
        if self.language not in LANGUAGES:
            raise ConfigError(f"unknown language: {self.language!r}")
        if self.k < 0:
            raise ConfigError("k must be >= 0")
        if not 0 < self.seed_ratio <= 1:
            raise ConfigError(f"seed_ratio must be in (0, 1]: {self.seed_ratio}")

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        sweep = raw.pop("sweep", None)
        try:
            config = cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad run configuration: {exc}") from None
        if sweep is not None:
            config.sweep = SweepGrid(**sweep)
        return config

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self) -> dict:
        out = {
            "task": self.task,
            "language": self.language,
            "k": self.k,
            "seed_ratio": self.seed_ratio,
            "rng_seed": self.rng_seed,
            "entity_linking": self.entity_linking,
            "backend": self.backend,
            "dataset_kind": self.dataset_kind,
            "dataset_path": self.dataset_path,
            "targets_path": self.targets_path,
            "kb_path": self.kb_path,
            "vocab_path": self.vocab_path,
            "max_targets": self.max_targets,
            "mask_prompt_target": self.mask_prompt_target,
            "most_similar_last": self.most_similar_last,
            "max_in_flight": self.max_in_flight,
            "out_dir": self.out_dir,
            "remote": dict(self.remote),
        }
        if self.sweep is not None:
            out["sweep"] = {
                "k_values": self.sweep.k_values,
                "linking": self.sweep.linking,
                "runs": self.sweep.runs,
            }
        return out


def build_backend(config: RunConfig, gold: dict | None = None):
    """Instantiate the backend named by a spec string like ``mock:echo_gold``,
    ``mock:fixed:TEXT``, ``mock:corrupt:0.5`` or ``remote``."""
    spec = config.backend
    if spec.startswith("mock:"):
        fields = spec.split(":", 2)
        mode = fields[1]
        if mode == "fixed":
            return MockOracle("fixed", fixed_text=fields[2] if len(fields) > 2 else "")
        if mode == "echo_gold":
            return MockOracle("echo_gold", gold=gold)
        if mode == "copy_demo":
            return MockOracle("copy_demo")
        if mode == "corrupt":
            rate = float(fields[2]) if len(fields) > 2 else 1.0
            return MockOracle("corrupt", gold=gold, rate=rate, rng_seed=config.rng_seed)
        raise ConfigError(f"unknown mock mode: {mode!r}")
    if spec == "remote" or spec.startswith("remote:"):
        options = dict(config.remote)
        if ":" in spec:
            options.setdefault("preset", spec.split(":", 1)[1])
        missing = {"url", "model"} - set(options)
        if missing:
            raise ConfigError(f"remote backend config missing {sorted(missing)}")
        return RemoteBackend(**options)
    raise ConfigError(f"unknown backend spec: {spec!r}")


# ---------------------------------------------------------------------------
# reports

@dataclass
class Row:
    id: str
    prompt_sha256: str
    raw_output: str
    output: str
    metrics: dict
    flags: list[str] = field(default_factory=list)
    qtype: str | None = None

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "prompt_sha256": self.prompt_sha256,
            "raw_output": self.raw_output,
            "output": self.output,
            "metrics": self.metrics,
            "flags": self.flags,
        }
        if self.qtype is not None:
            out["qtype"] = self.qtype
        return out


@dataclass
class SweepCell:
    k: int
    linking: bool
    run: int
    metric: str
    value: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "linking": self.linking,
            "run": self.run,
            "metric": self.metric,
            "value": self.value,
        }


@dataclass
class ExperimentReport:
    task: str
    language: str
    rows: list[Row] = field(default_factory=list)
    sweep: list[SweepCell] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def aggregates(self) -> dict:
        keys = sorted({k for row in self.rows for k in row.metrics})
        return {
            key: sum(row.metrics.get(key, 0) for row in self.rows) / len(self.rows)
            for key in keys
        } if self.rows else {}

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "language": self.language,
            "config": self.config,
            "aggregates": self.aggregates(),
            "rows": [row.to_dict() for row in self.rows],
            "sweep": [cell.to_dict() for cell in self.sweep],
        }


def _sweep_grid_markdown(report: ExperimentReport) -> list[str]:
    cells = report.sweep
    runs = sorted({c.run for c in cells})
    k_values = sorted({c.k for c in cells})
    strategies = [s for s in (False, True) if any(c.linking == s for c in cells)]
    labels = {False: "w/o e.l.", True: "w/ e.l."}
    by_key = {(c.k, c.linking, c.run): c.value for c in cells}
    header = ["Demonstrations"] + [
        f"{labels[s]} run {r}" for s in strategies for r in runs
    ]
    lines = ["| " + " | ".join(header) + " |",
             "|" + "---|" * len(header)]
    for k in k_values:
        cells_row = []
        for s in strategies:
            for r in runs:
                value = by_key.get((k, s, r))
                cells_row.append("---" if value is None else f"{value:.3f}")
        lines.append("| " + " | ".join([str(k)] + cells_row) + " |")
    return lines


def emit_report(report: ExperimentReport, out_dir, formats=("json", "md")) -> dict:
    """Write report.json and/or report.md under out_dir; returns the paths.

    Output is byte-stable for identical inputs: keys are sorted and nothing
    time-dependent is included.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(
            json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        paths["json"] = path
    if "md" in formats:
        lines = [
            "# Experiment report",
            "",
            f"- task: {report.task}",
            f"- language: {report.language}",
            f"- rows: {len(report.rows)}",
            "",
            "## Aggregates",
            "",
        ]
        aggregates = report.aggregates()
        if aggregates:
            lines += ["| metric | mean |", "|---|---|"]
            lines += [f"| {k} | {v:.3f} |" for k, v in sorted(aggregates.items())]
        else:
            lines.append("(no rows)")
        if report.sweep:
            lines += ["", "## Demonstration sweep", ""]
            lines += _sweep_grid_markdown(report)
        path = out_dir / "report.md"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths["md"] = path
    return paths


# ---------------------------------------------------------------------------
# probing runs

def _understanding_lf_text(program: FormalProgram) -> str:
    if program.language == KOPL:
        return serialize_kopl(program.body, "chain")
    return program.source_text


def _generation_lf_text(program: FormalProgram) -> str:
    if program.language == KOPL:
        return serialize_kopl(program.body, "tagged")
    return program.source_text


def _postprocess(raw: str) -> str:
    return raw.split(prompts.SEPARATOR)[0].strip()


def understanding_gold(targets) -> dict:
    return {t.id: t.question for t in targets}


def generation_gold(targets) -> dict:
    gold = {}
    for record in targets:
        if record.lf.language == KOPL:
            gold[record.id] = record.lf.tagged or serialize_kopl(
                parse_program(KOPL, record.lf.text).body, "tagged"
            )
        else:
            gold[record.id] = record.lf.text
    return gold


def _complete_all(config: RunConfig, backend, requests):
    return run_many(backend, requests, max_in_flight=config.max_in_flight)


def run_understanding(config: RunConfig, seeds: SeedSet | None, targets, backend=None):
    """LF -> question probe. Returns (pseudo_records, ExperimentReport).

    The pseudo-dataset pairs each generated question with its gold LF and has
    one row per target even when the backend failed (failed rows are flagged).
    """
    targets = list(targets)
    if backend is None:
        backend = build_backend(config, gold=understanding_gold(targets))
    zero_shot = config.task == "zero_shot_understanding"
    requests = []
    programs = []
    for record in targets:
        program = _parse_record(record)
        programs.append(program)
        lf_text = _understanding_lf_text(program)
        if zero_shot:
            prompt = prompts.build_zero_shot_prompt(lf_text, language=config.language)
        else:
            demo_pairs = []
            if config.k > 0 and seeds is not None:
                demos = select_lf_demos(
                    program, seeds, config.k, most_similar_last=config.most_similar_last
                )
                demo_pairs = [
                    (_understanding_lf_text(d.program), d.question) for d in demos
                ]
            prompt = prompts.build_understanding_prompt(lf_text, demo_pairs, config.language)
        requests.append(CompletionRequest(prompt=prompt.text, request_id=record.id))

    responses = _complete_all(config, backend, requests)
    rows, pseudo = [], []
    for record, program, request, response in zip(targets, programs, requests, responses):
        flags: list[str] = []
        if isinstance(response, BackendError):
            raw, generated = "", ""
            flags.append("backend_failure")
        else:
            raw = response.text
            generated = _postprocess(raw)
        metrics = {}
        if record.question:
            metrics["question_match"] = int(
                normalize_ws(generated) == normalize_ws(record.question)
            )
        rows.append(
            Row(
                id=record.id,
                prompt_sha256=sha256_hex(request.prompt),
                raw_output=raw,
                output=generated,
                metrics=metrics,
                flags=flags,
            )
        )
        pseudo.append(_pseudo_record(record, generated))
    rows.sort(key=lambda r: r.id)
    report = ExperimentReport(
        task=config.task, language=config.language, rows=rows, config=config.to_dict()
    )
    return pseudo, report


def _pseudo_record(record: CanonicalRecord, generated_question: str) -> dict:
    """A training record in the ingested dataset's native shape, with the
    model question standing in for the human one."""
    if record.lf.language == KOPL:
        program = parse_program(KOPL, record.lf.text).body
        out = {
            "question": generated_question,
            "program": [
                {"function": fn.name, "inputs": list(fn.args), "dependencies": list(fn.deps)}
                for fn in program.functions
            ],
        }
    elif record.lf.language == SPARQL:
        out = {
            "question": generated_question,
            "sparql_query": record.lf.text,
            "s_expression": record.lf.sexpr,
        }
    else:
        out = {"question": generated_question, "logical_form": record.lf.text}
    out["id"] = record.id
    if record.answer is not None:
        out["answer"] = record.answer
    return out


def write_pseudo_dataset(pseudo_records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for record in pseudo_records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    return path


def _kb_block(record: CanonicalRecord, kb: ToyKB) -> str:
    names: set[str] = set()
    for entity in record.entities:
        ids = []
        if entity.get("kb_id") and entity["kb_id"] in kb.entities:
            ids = [entity["kb_id"]]
        else:
            ids = kb.find_by_name(entity["name"])
        for eid in ids:
            from .linking import two_hop_context

            names.update(two_hop_context(kb, eid, radius=2))
    return prompts.kb_context_block(names)


def _relink_output(language: str, text: str, name_index: NameIndex):
    if language == KOPL:
        return relink_kopl(text, name_index)
    if language == SPARQL:
        return relink_sparql(text, name_index)
    return None


def run_generation(
    config: RunConfig,
    seeds: SeedSet | None,
    targets,
    backend=None,
    name_index: NameIndex | None = None,
    kb: ToyKB | None = None,
) -> ExperimentReport:
    """Question -> LF probe with optional KB context injection and post-hoc
    name linking; every target contributes one scored row."""
    targets = list(targets)
    if backend is None:
        backend = build_backend(config, gold=generation_gold(targets))
    requests = []
    for record in targets:
        program = _parse_record(record)
        spans = mask_spans(record, program)
        demo_pairs = []
        if config.k > 0 and seeds is not None:
            demos = select_nlq_demos(
                record.question, spans, seeds, config.k,
                most_similar_last=config.most_similar_last,
            )
            demo_pairs = [(d.question, _generation_lf_text(d.program)) for d in demos]
        target_text = (
            mask_nlq(record.question, spans).text if config.mask_prompt_target else record.question
        )
        prompt = prompts.build_generation_prompt(target_text, demo_pairs, config.language)
        text = prompt.text
        if config.entity_linking and kb is not None:
            block = _kb_block(record, kb)
            if block:
                text = f"{block}\n{text}"
        requests.append(CompletionRequest(prompt=text, request_id=record.id))

    responses = _complete_all(config, backend, requests)
    rows = []
    for record, request, response in zip(targets, requests, responses):
        flags: list[str] = []
        if isinstance(response, BackendError):
            raw, output = "", ""
            flags.append("backend_failure")
        else:
            raw = response.text
            output = _postprocess(raw)
        if config.entity_linking and name_index is not None and output:
            try:
                outcome = _relink_output(config.language, output, name_index)
            except PARSE_ERRORS:
                outcome = None
                flags.append("parse_failure")
            if outcome is not None:
                output = outcome.text
                if outcome.unlinked:
                    flags.append("link_failure")
        metrics = {"exact_match": exact_match(output, record.lf.text, config.language)}
        if "parse_failure" not in flags and output:
            try:
                parse_program(config.language, output)
            except PARSE_ERRORS:
                flags.append("parse_failure")
        if config.language == KOPL and kb is not None and record.answer is not None:
            metrics["answer_accuracy"] = _scored_answer(output, record.answer, kb, flags)
        rows.append(
            Row(
                id=record.id,
                prompt_sha256=sha256_hex(request.prompt),
                raw_output=raw,
                output=output,
                metrics=metrics,
                flags=flags,
            )
        )
    rows.sort(key=lambda r: r.id)
    return ExperimentReport(
        task="generation", language=config.language, rows=rows, config=config.to_dict()
    )


def compare_answer(answer: Answer, gold) -> bool:
    """Gold names compare as sets; counts, booleans and values compare on
    their canonical text rendering."""
    if answer.kind == "names":
        gold_set = {str(g) for g in gold} if isinstance(gold, (list, tuple, set)) else {str(gold)}
        return set(answer.payload) == gold_set
    if isinstance(gold, (list, tuple, set)):
        return len(gold) == 1 and compare_answer(answer, next(iter(gold)))
    if answer.kind == "count":
        try:
            return int(gold) == answer.payload
        except (TypeError, ValueError):
            return False
    if answer.kind == "boolean":
        return str(gold).strip().lower() == answer.payload
    return answer.render() == str(gold)


def _scored_answer(output: str, gold, kb: ToyKB, flags: list[str]) -> int:
    try:
        program = parse_program(KOPL, output).body
    except PARSE_ERRORS:
        if "parse_failure" not in flags:
            flags.append("parse_failure")
        return 0
    try:
        answer = execute(program, kb)
    except ExecutionError:
        flags.append("execution_error")
        return 0
    return int(compare_answer(answer, gold))


def answer_accuracy(predicted, gold_answer, kb: ToyKB) -> int:
    """1 iff the predicted KoPL program executes to the gold answer;
    parse and execution errors score 0."""
    if isinstance(predicted, KoplProgram):
        program = predicted
    else:
        try:
            program = parse_program(KOPL, predicted).body
        except PARSE_ERRORS:
            return 0
    try:
        answer = execute(program, kb)
    except ExecutionError:
        return 0
    return int(compare_answer(answer, gold_answer))


def run_sweep(
    config: RunConfig,
    seeds: SeedSet | None,
    targets,
    name_index: NameIndex | None = None,
    kb: ToyKB | None = None,
) -> ExperimentReport:
    """Demo-count x entity-linking grid of generation runs; each cell stores
    the aggregate exact match of one run."""
    if config.sweep is None:
        raise ConfigError("run_sweep requires a sweep grid in the configuration")
    grid = config.sweep
    report = ExperimentReport(
        task="generation", language=config.language, config=config.to_dict()
    )
    for linking in grid.linking:
        for k in grid.k_values:
            for run_no in range(1, grid.runs + 1):
                cell_config = RunConfig.from_dict(
                    {
                        **config.to_dict(),
                        "k": k,
                        "entity_linking": linking,
                        "rng_seed": config.rng_seed + run_no - 1,
                        "sweep": None,
                    }
                )
                cell_report = run_generation(
                    cell_config, seeds, targets, name_index=name_index, kb=kb
                )
                report.sweep.append(
                    SweepCell(
                        k=k,
                        linking=linking,
                        run=run_no,
                        metric="exact_match",
                        value=cell_report.aggregates().get("exact_match", 0.0),
                    )
                )
    return report
