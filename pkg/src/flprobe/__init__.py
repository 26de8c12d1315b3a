"""flprobe: probing formal-language understanding and generation over KBs."""

from .bracket_ast import BracketError, BracketTree, parse_bracket, serialize_bracket
from .executor import Answer, ExecutionError, execute
from .gateway import (
    BackendError,
    CompletionRequest,
    CompletionResponse,
    MockOracle,
    RemoteBackend,
    complete,
)
from .harness import (
    CanonicalRecord,
    ExperimentReport,
    RunConfig,
    answer_accuracy,
    emit_report,
    ingest,
    make_seed_set,
    run_generation,
    run_sweep,
    run_understanding,
    sample_seed,
)
from .kb import Fact, KbError, RelationFact, ToyKB, Value, load_kb
from .kopl_ast import KoplError, KoplFunction, KoplProgram, parse_kopl, serialize_kopl
from .linking import (
    LinkError,
    NameIndex,
    build_name_index,
    link,
    relink_kopl,
    relink_sparql,
    two_hop_context,
)
from .programs import FormalProgram, exact_match, parse_program
from .prompts import (
    Prompt,
    build_generation_prompt,
    build_understanding_prompt,
    build_zero_shot_prompt,
    kb_context_block,
)
from .retrieval import (
    Bm25Index,
    SeedExample,
    SeedSet,
    build_bm25_index,
    build_skeleton_index,
    bm25_query,
    greedy_cover_select,
    rank_skeletons,
    select_lf_demos,
    select_nlq_demos,
    skeleton_edit_distance,
)
from .skeletons import NlqSkeleton, Skeleton, mask_nlq, skeleton_of
from .sparql_ast import SparqlParseError, SparqlQuery, parse_sparql

__version__ = "0.1.0"
