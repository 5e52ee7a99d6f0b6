"""Population initialisation, reflection and split selection at one tree node."""
from __future__ import annotations

import json
import logging
import math
import re
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..dsl import DEFAULT_MAX_DEPTH, DEFAULT_MAX_WINDOWS, DSLError, Expr, parse, validate
from ..llm import Backend, BackendError
from ..splits import (
    IMPROVEMENT_EPS, NodeContext, SemanticRep, SplitChoice, SplitSpec, best_thresholds,
)
from .population import (
    Candidate, Population, one_hot_codes, raw_candidates, score_candidates,
)
from .prompts import PromptSet, TaskContext, generic_task, render_population_prompt

logger = logging.getLogger(__name__)

INSTRUCTIONS = ("explore", "exploit")
PERF_MAX_DEPTH = 16


class RejectedProposal(Exception):
    """A reply could not be turned into a valid feature within the retry budget."""


class GenerationError(RuntimeError):
    """Backend failure during feature generation, tagged with the node path."""


class GuaranteeViolation(AssertionError):
    pass


@dataclass
class GenerationConfig:
    population_size: int = 10
    n_reflections: int = 20
    interpretability: str = "standard"
    ablation: str = "none"
    max_parse_retries: int = 2
    attempt_factor: int = 3

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.n_reflections < 0:
            raise ValueError("n_reflections must be >= 0")
        if self.interpretability not in ("standard", "perf"):
            raise ValueError("interpretability must be 'standard' or 'perf'")
        if self.ablation not in ("none", "no_prior", "no_ref"):
            raise ValueError("ablation must be one of none, no_prior, no_ref")
        if self.max_parse_retries < 0:
            raise ValueError("max_parse_retries must be >= 0")

    @property
    def effective_reflections(self) -> int:
        return 0 if self.ablation == "no_ref" else self.n_reflections

    @property
    def max_depth(self) -> int:
        return PERF_MAX_DEPTH if self.interpretability == "perf" else DEFAULT_MAX_DEPTH


class Transcript:
    """Append-only record of every backend exchange, optionally mirrored to JSONL."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.records: list[dict] = []
        self._lock = threading.Lock()
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def log(self, **record):
        with self._lock:
            self.records.append(record)
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")


_FENCE_RE = re.compile(r"^```[A-Za-z]*\s*|\s*```$")


def _strip_fences(text: str) -> str:
    return _FENCE_RE.sub("", text.strip()).strip()


def parse_semantics(reply: str) -> SemanticRep:
    text = _strip_fences(reply)
    start, end = text.find("{"), text.rfind("}")
    if start < 0 or end <= start:
        raise ValueError("no JSON object in reply")
    data = json.loads(text[start : end + 1])
    if not isinstance(data, dict):
        raise ValueError("reply is not a JSON object")
    fields_ = {}
    for key in ("rationale", "name", "description"):
        value = data.get(key)
        if not isinstance(value, str):
            raise ValueError(f"missing or non-string field {key!r}")
        fields_[key] = value.strip()
    return SemanticRep(**fields_)


@dataclass
class NodeGenerator:
    """Runs feature generation for the nodes of one tree.

    Owns the backend, prompts, configuration and transcript; each call to
    :meth:`find_split` is independent so frontier nodes may run in threads.
    """

    backend: Backend
    task: TaskContext
    config: GenerationConfig = field(default_factory=GenerationConfig)
    transcript: Transcript = field(default_factory=Transcript)

    def __post_init__(self):
        task = generic_task(self.task) if self.config.ablation == "no_prior" else self.task
        self.prompts = PromptSet(task, self.config.interpretability)

    # -- backend exchanges -------------------------------------------------

    def _exchange(self, node: str, stage: str, prompt: str) -> str:
        try:
            reply = self.backend.chat(self.prompts.system, prompt)
        except BackendError as exc:
            self.transcript.log(node=node, stage=stage, prompt=prompt, reply=None,
                                verdict=f"backend_error: {exc}", score=None)
            raise
        return reply

    def propose_semantics(self, node: str, stage: str, prompt: str) -> SemanticRep:
        for _ in range(self.config.max_parse_retries + 1):
            reply = self._exchange(node, stage, prompt)
            try:
                sem = parse_semantics(reply)
            except (ValueError, TypeError) as exc:
                self.transcript.log(node=node, stage=stage, prompt=prompt, reply=reply,
                                    verdict=f"rejected: {exc}", score=None)
                continue
            self.transcript.log(node=node, stage=stage, prompt=prompt, reply=reply,
                                verdict="accepted", score=None)
            return sem
        raise RejectedProposal("semantic representation could not be parsed")

    def propose_expr(self, node: str, sem: SemanticRep) -> Expr:
        prompt = self.prompts.code(sem.name, sem.description)
        for _ in range(self.config.max_parse_retries + 1):
            reply = self._exchange(node, "code", prompt)
            try:
                expr = validate(parse(_strip_fences(reply)), self.task.seq_len,
                                max_depth=self.config.max_depth,
                                max_windows=DEFAULT_MAX_WINDOWS)
            except DSLError as exc:
                self.transcript.log(node=node, stage="code", prompt=prompt, reply=reply,
                                    verdict=f"rejected: {type(exc).__name__}: {exc}", score=None)
                continue
            self.transcript.log(node=node, stage="code", prompt=prompt, reply=reply,
                                verdict="accepted", score=None)
            return expr
        raise RejectedProposal("feature expression could not be parsed or validated")

    def _sample(self, node: str, stage: str, prompt: str, origin: str, seen: set[str],
                next_order, want: int) -> tuple[list[Candidate], int]:
        """Draw until ``want`` new candidates are accepted or the attempt cap is hit."""
        accepted: list[Candidate] = []
        attempts = 0
        cap = self.config.attempt_factor * want
        while len(accepted) < want and attempts < cap:
            attempts += 1
            try:
                sem = self.propose_semantics(node, stage, prompt)
                expr = self.propose_expr(node, sem)
            except RejectedProposal:
                continue
            cand = Candidate(expr, sem, origin, next_order())
            if cand.text in seen:
                self.transcript.log(node=node, stage=stage, prompt=None, reply=cand.text,
                                    verdict="rejected: duplicate feature", score=None)
                continue
            seen.add(cand.text)
            accepted.append(cand)
        return accepted, attempts

    # -- Algorithm steps -------------------------------------------------

    def init_population(self, ctx: NodeContext, X: np.ndarray, y: np.ndarray,
                        min_child: int) -> Population:
        if len(y) == 0:
            raise ValueError("node subset is empty")
        counter = iter(range(10**9))
        next_order = lambda: next(counter)  # noqa: E731
        node = ctx.label
        prompt = self.prompts.init_semantics(ctx.path)
        try:
            generated, attempts = self._sample(node, "init", prompt, "llm_init", set(),
                                               next_order, self.config.population_size)
        except BackendError as exc:
            raise GenerationError(f"node {node}: {exc}") from exc
        logger.info("node %s: %d generated candidates accepted in %d attempts",
                    node, len(generated), attempts)
        raws = raw_candidates(self.task.seq_len, start_order=next_order())
        for _ in range(len(raws) - 1):
            next_order()
        cands = score_candidates([*generated, *raws], X, y, min_child)
        pop = Population(cands, self.config.population_size)
        pop.next_order = next_order
        for c in cands:
            if c.origin != "raw":
                self.transcript.log(node=node, stage="score", prompt=None, reply=c.text,
                                    verdict="scored", score=c.score)
        return pop

    def reflect_once(self, pop: Population, ctx: NodeContext, X: np.ndarray, y: np.ndarray,
                     min_child: int) -> Population:
        node = ctx.label
        next_order = getattr(pop, "next_order", None)
        if next_order is None:
            start = max((c.order for c in pop), default=-1) + 1
            counter = iter(range(start, 10**9))
            next_order = lambda: next(counter)  # noqa: E731
        population_text = render_population_prompt(pop.top())
        seen = pop.texts()
        fresh: list[Candidate] = []
        try:
            for instruction in INSTRUCTIONS:
                prompt = self.prompts.reflect_semantics(ctx.path, population_text, instruction)
                got, _ = self._sample(node, instruction, prompt, f"llm_{instruction}", seen,
                                      next_order, self.config.population_size)
                fresh += got
        except BackendError as exc:
            logger.warning("node %s: reflection aborted, keeping population (%s)", node, exc)
            self.transcript.log(node=node, stage="reflect", prompt=None, reply=None,
                                verdict=f"iteration aborted: {exc}", score=None)
            return pop
        scored = score_candidates(fresh, X, y, min_child)
        for c in scored:
            self.transcript.log(node=node, stage="score", prompt=None, reply=c.text,
                                verdict="scored", score=c.score)
        new_pop = pop.select(scored)
        new_pop.next_order = next_order
        return new_pop

    def run(self, ctx: NodeContext, X: np.ndarray, y: np.ndarray, min_child: int):
        """Initialise then reflect ``K`` times; returns the final population and
        the per-iteration minimum scores."""
        pop = self.init_population(ctx, X, y, min_child)
        history = [pop.min_score]
        for _ in range(self.config.effective_reflections):
            pop = self.reflect_once(pop, ctx, X, y, min_child)
            history.append(pop.min_score)
        return pop, history

    def find_split(self, ctx: NodeContext, X: np.ndarray, y: np.ndarray,
                   min_child: int) -> Optional[SplitChoice]:
        raw_best = raw_best_score(X, y, min_child)
        pop, history = self.run(ctx, X, y, min_child)
        choice = select_split(pop, raw_best)
        if choice is not None:
            choice.log["min_score_history"] = history
        return choice


def raw_best_score(X: np.ndarray, y: np.ndarray, min_child: int) -> float:
    """Best split score over all one-hot coordinates, computed on its own."""
    _, scores = best_thresholds(one_hot_codes(X), y, min_child)
    return float(scores.min()) if scores.size else math.inf


def select_split(pop: Population, raw_best: float) -> Optional[SplitChoice]:
    best = pop.best()
    if best is None:
        return None
    if best.score > raw_best + IMPROVEMENT_EPS:
        raise GuaranteeViolation(
            f"selected score {best.score} worse than best raw score {raw_best}"
        )
    spec = SplitSpec(best.expr, best.semantics, best.threshold, best.score,
                     origin="raw" if best.origin == "raw" else "generated", volume=best.volume)
    return SplitChoice(spec, raw_best, {"candidate_origin": best.origin})


def root_feature_bank(X: np.ndarray, y: np.ndarray, generator: NodeGenerator,
                      min_child: int) -> list[Candidate]:
    """Feature population generated once for the whole training set."""
    root = NodeContext((), tuple(range(len(y))), 0)
    pop, _ = generator.run(root, X, y, min_child)
    return list(pop)


def candidate_to_dict(c: Candidate) -> dict:
    return {
        "expr": c.text,
        "semantics": asdict(c.semantics),
        "origin": c.origin,
    }
