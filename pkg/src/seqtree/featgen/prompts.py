"""Prompt assembly from the template assets in ``templates/``."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Sequence

from ..dsl import grammar_text, render
from ..splits import NodeContext, SplitSpec

NODE_BEGIN = "<Beginning Splitting conditions from root to current node>"
NODE_END = "<End of Splitting conditions from root to current node>"
POP_BEGIN = "<Beginning of the population of features>"
POP_END = "<End of the population of features>"
OP_WORDS = {"<=": "smaller than", ">": "greater than"}


@lru_cache(maxsize=None)
def template(name: str) -> str:
    return resources.files("seqtree.featgen.templates").joinpath(f"{name}.txt").read_text()


def fill(text: str, **slots: str) -> str:
    for key, value in slots.items():
        text = text.replace("{" + key + "}", value)
    return text


@dataclass(frozen=True)
class TaskContext:
    description: str
    seq_len: int
    dataset_size: int
    regions: tuple[tuple[int, int, str], ...] = ()
    feature_schema: str = ""

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(tuple(r) for r in self.regions))
        if not self.feature_schema:
            object.__setattr__(
                self,
                "feature_schema",
                f"raw_sequence: text (average length: {float(self.seq_len):.1f} characters)",
            )

    def regions_text(self) -> str:
        parts = []
        for a, b, label in self.regions:
            if a == b:
                parts.append(f"Position {a} corresponds to the {label}.")
            else:
                parts.append(f"Positions from {a} to {b} included correspond to the {label}.")
        return " ".join(parts)


def generic_task(task: TaskContext) -> TaskContext:
    """Task context with the description swapped for a generic stub (no-prior ablation)."""
    return TaskContext(
        template("generic_task").strip(), task.seq_len, task.dataset_size, (), task.feature_schema
    )


def render_task(task: TaskContext) -> str:
    regions = task.regions_text()
    return fill(
        template("task"),
        TASK_DESCRIPTION=task.description.strip(),
        REGIONS=(" " + regions) if regions else "",
        FEATURE_SCHEMA=task.feature_schema,
        DATASET_SIZE=str(task.dataset_size),
    ).rstrip("\n")


def render_condition(spec: SplitSpec) -> str:
    sem = spec.semantics
    return f"{sem.name} {OP_WORDS[spec.op]} {spec.threshold:.3f} ({sem.description})"


def render_node_context(ctx: NodeContext | Sequence[SplitSpec]) -> str:
    path = ctx.path if isinstance(ctx, NodeContext) else tuple(ctx)
    lines = [NODE_BEGIN, *(render_condition(s) for s in path), NODE_END]
    return "\n".join(lines)


def format_score(score: float) -> str:
    """Four decimals with trailing zeros dropped: 0.195 -> '0.195', 0.26667 -> '0.2667'."""
    if not math.isfinite(score):
        return "infeasible"
    text = f"{round(score, 4):.4f}".rstrip("0")
    return text + "0" if text.endswith(".") else text


def render_population_prompt(pop) -> str:
    """Serialise scored candidates in population order."""
    cands = list(pop)
    if not cands:
        raise ValueError("cannot render an empty population")
    lines = [POP_BEGIN, "Here is the list of features along with their score:"]
    for i, c in enumerate(cands, start=1):
        if c.score is None:
            raise ValueError(f"candidate {c.semantics.name!r} is not scored")
        lines += [
            f"Feature {i}",
            f"Score: {format_score(c.score)}",
            f" Feature name: {c.semantics.name}",
            f" Feature description: {c.semantics.description}",
            f" Feature code: {render(c.expr)}",
        ]
    lines.append(POP_END)
    return "\n".join(lines)


@dataclass
class PromptSet:
    """Builds the three prompt kinds for one run configuration."""

    task: TaskContext
    interpretability: str = "standard"
    system: str = field(default_factory=lambda: template("system").strip())

    def __post_init__(self):
        if self.interpretability not in ("standard", "perf"):
            raise ValueError("interpretability must be 'standard' or 'perf'")

    @property
    def interpretability_text(self) -> str:
        return template(f"interpretability_{self.interpretability}").strip()

    def init_semantics(self, path: Sequence[SplitSpec]) -> str:
        return fill(
            template("init_semantics"),
            TASK=render_task(self.task),
            NODE_CONTEXT=render_node_context(path),
            INTERPRETABILITY=self.interpretability_text,
        )

    def reflect_semantics(self, path: Sequence[SplitSpec], population_text: str,
                          instruction: str) -> str:
        return fill(
            template("reflect_semantics"),
            TASK=render_task(self.task),
            INSTRUCTION=template(f"instruction_{instruction}").strip(),
            INTERPRETABILITY=self.interpretability_text,
            POPULATION=population_text,
            NODE_CONTEXT=render_node_context(path),
        )

    def code(self, name: str, description: str) -> str:
        regions = self.task.regions_text()
        return fill(
            template("code"),
            SEQ_LEN=str(self.task.seq_len),
            LAST_POS=str(self.task.seq_len - 1),
            GRAMMAR=grammar_text().strip(),
            NAME=name,
            DESCRIPTION=description,
            REGIONS_TEXT=(regions + "\n\n") if regions else "",
        )
