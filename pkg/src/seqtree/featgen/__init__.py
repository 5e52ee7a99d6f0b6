"""Candidate-feature generation: prompts, populations, reflection and fixed feature sets."""
from .fixed import BankSplitFinder, KmerSplitFinder, RawSplitFinder
from .generator import (
    GenerationConfig, GenerationError, GuaranteeViolation, NodeGenerator, RejectedProposal,
    Transcript, candidate_to_dict, parse_semantics, raw_best_score, root_feature_bank,
    select_split,
)
from .population import Candidate, Population, raw_candidates, raw_semantics, score_candidates
from .prompts import (
    PromptSet, TaskContext, format_score, generic_task, render_node_context,
    render_population_prompt, render_task,
)

__all__ = [
    "BankSplitFinder", "Candidate", "GenerationConfig", "GenerationError",
    "GuaranteeViolation", "KmerSplitFinder", "NodeGenerator", "Population", "PromptSet",
    "RawSplitFinder", "RejectedProposal", "TaskContext", "Transcript", "candidate_to_dict",
    "format_score", "generic_task", "parse_semantics", "raw_best_score", "raw_candidates",
    "raw_semantics", "render_node_context", "render_population_prompt", "render_task",
    "root_feature_bank", "score_candidates", "select_split",
]
