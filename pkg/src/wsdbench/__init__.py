"""Word sense disambiguation benchmarking over SALDO-style sense graphs."""
from .data import (
    Dataset,
    Instance,
    SenseDefinition,
    filter_for_evaluation,
    load_definitions,
    load_instances,
    save_definitions,
)
from .evaluation import EvalReport, Outcome, compare_reports, emit_report, run_evaluation
from .prompts import (
    PromptBundle,
    PromptMode,
    build_cot_prompt,
    build_definition_prompt,
    build_definition_writing_prompt,
    build_neighborhood_prompt,
    parse_answer,
    parse_written_definitions,
    render_context,
)
from .senses import SenseEntry, SenseGraph, SenseId, load_lexicon, neighborhood

__version__ = "0.1.0"
