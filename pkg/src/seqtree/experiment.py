"""Seed x depth experiment sweeps with CSV/JSON reports."""
from __future__ import annotations

import csv
import json
import logging
import math
import statistics
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dsl import complexity
from .estimator import FeatureTreeClassifier
from .llm import BackendParams, ChatClient, ScriptedBackend
from .metrics import MetricsError, compute_metrics
from .seqdata import load_csv, synth_motif, train_test_split
from .tree import DecisionTree, save_tree

logger = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "precision", "recall", "f1", "auprc")
RESULT_HEADER = (
    ["mode", "seed", "depth", "n_internal", "n_leaves"]
    + [f"{split}_{m}" for split in ("train", "test") for m in METRIC_NAMES]
    + ["halstead_volume", "halstead_difficulty", "halstead_effort"]
)
AGGREGATE_HEADER = ["mode", "depth", "n_seeds"] + [
    f"{split}_{m}_{stat}" for split in ("train", "test") for m in METRIC_NAMES
    for stat in ("mean", "std")
]
HALSTEAD_HEADER = ["node", "name", "expr", "origin", "volume", "difficulty", "effort"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SynthSpec(_Strict):
    n: int = Field(6000, ge=2)
    seq_len: int = Field(101, ge=1)
    motif: str = "TATA"
    balance: bool = True


class DatasetSpec(_Strict):
    csv: Optional[str] = None
    synth: Optional[SynthSpec] = None
    test_frac: float = Field(0.2, gt=0, lt=1)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.csv is None) == (self.synth is None):
            raise ValueError("exactly one of 'csv' or 'synth' must be given")
        return self


class InductionSpec(_Strict):
    min_leaf_frac: float = Field(0.01, gt=0, lt=0.5)
    kmer_k: int = Field(2, ge=1)
    n_jobs: int = Field(1, ge=1)


class GenerationSpec(_Strict):
    population_size: int = Field(10, ge=1)
    n_reflections: int = Field(20, ge=0)
    interpretability: Literal["standard", "perf"] = "standard"
    ablation: Literal["none", "no_prior", "no_ref"] = "none"
    max_parse_retries: int = Field(2, ge=0)


class BackendSpec(_Strict):
    kind: Literal["live", "scripted"]
    fixture: Optional[str] = None
    model: str = "gpt-4o"
    base_url: Optional[str] = None
    temperature: float = Field(1.0, ge=0)
    top_p: float = Field(0.95, ge=0, le=1)
    timeout: float = Field(60.0, gt=0)
    max_retries: int = Field(5, ge=0)
    max_in_flight: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _fixture_for_scripted(self):
        if self.kind == "scripted" and not self.fixture:
            raise ValueError("scripted backend needs 'fixture'")
        return self


class TaskSpec(_Strict):
    description: Optional[str] = None
    regions: list[tuple[int, int, str]] = []


class RunConfig(_Strict):
    dataset: DatasetSpec
    mode: Literal["deft", "cart_onehot", "cart_kmer", "deft_no_adapt"] = "deft"
    depths: list[int] = [1, 2, 3, 4, 5, 6]
    seeds: list[int] = [0, 1, 2, 3, 4]
    induction: InductionSpec = InductionSpec()
    generation: GenerationSpec = GenerationSpec()
    backend: Optional[BackendSpec] = None
    task: TaskSpec = TaskSpec()
    output_dir: str = "runs/experiment"

    @model_validator(mode="after")
    def _backend_for_deft(self):
        if self.mode in ("deft", "deft_no_adapt") and self.backend is None:
            raise ValueError(f"mode {self.mode!r} requires a 'backend' section")
        if not self.depths or any(d < 0 for d in self.depths):
            raise ValueError("depths must be a non-empty list of non-negative integers")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        return self


class ConfigError(ValueError):
    pass


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def load_config(source, base_dir: Path | None = None) -> RunConfig:
    """Parse a JSON/YAML config file (or dict); relative paths resolve against its folder."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        data = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
        base_dir = path.parent
    else:
        data = source
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from None
    if base_dir is not None:
        if cfg.dataset.csv and not Path(cfg.dataset.csv).is_absolute():
            cfg.dataset.csv = str(base_dir / cfg.dataset.csv)
        if cfg.backend and cfg.backend.fixture and not Path(cfg.backend.fixture).is_absolute():
            cfg.backend.fixture = str(base_dir / cfg.backend.fixture)
    return cfg


def make_backend(spec: BackendSpec):
    if spec.kind == "scripted":
        return ScriptedBackend.from_fixture(spec.fixture)
    params = BackendParams(
        model=spec.model, base_url=spec.base_url, temperature=spec.temperature,
        top_p=spec.top_p, timeout=spec.timeout, max_retries=spec.max_retries,
        max_in_flight=spec.max_in_flight,
    )
    return ChatClient(params)


def halstead_rows(tree: DecisionTree) -> list[dict]:
    rows = []
    for nd in tree.internal_nodes():
        h = complexity(nd.split.expr)
        rows.append({
            "node": nd.id, "name": nd.split.semantics.name, "expr": nd.split.text,
            "origin": nd.split.origin, "volume": h.volume, "difficulty": h.difficulty,
            "effort": h.effort,
        })
    return rows


def halstead_medians(rows: list[dict], generated_only: bool = True) -> dict:
    use = [r for r in rows if r["origin"] == "generated"] if generated_only else rows
    if not use:
        return {"volume": math.nan, "difficulty": math.nan, "effort": math.nan}
    return {k: statistics.median(r[k] for r in use) for k in ("volume", "difficulty", "effort")}


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[h]) for h in header])


def _metrics_or_nan(p1, y) -> dict:
    try:
        return compute_metrics(p1, y).as_dict()
    except MetricsError as exc:
        logger.warning("metrics unavailable: %s", exc)
        return {k: math.nan for k in METRIC_NAMES}


def run_experiment(cfg: RunConfig, output_dir: str | Path | None = None) -> dict:
    """Train one tree per (seed, depth) and write reports under ``output_dir``.

    Layout::

        config.resolved.json
        data/seed{S}_{train,test}.csv
        runs/seed{S}_depth{D}/{tree.json,metrics.json,halstead.csv[,transcript.jsonl]}
        results.csv  aggregate.csv  halstead_summary.csv
    """
    out = Path(output_dir or cfg.output_dir)
    (out / "data").mkdir(parents=True, exist_ok=True)
    (out / "runs").mkdir(exist_ok=True)
    resolved = cfg.model_dump(mode="json")
    (out / "config.resolved.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")

    uses_backend = cfg.mode in ("deft", "deft_no_adapt")
    base = None if cfg.dataset.csv is None else load_csv(cfg.dataset.csv)
    results = []
    summary_rows = []
    for seed in cfg.seeds:
        if base is None:
            s = cfg.dataset.synth
            ds = synth_motif(s.n, s.seq_len, s.motif, s.balance, seed)
        else:
            ds = base
        train, test = train_test_split(ds, cfg.dataset.test_frac, seed)
        train.to_csv(out / "data" / f"seed{seed}_train.csv")
        test.to_csv(out / "data" / f"seed{seed}_test.csv")
        for depth in cfg.depths:
            run_dir = out / "runs" / f"seed{seed}_depth{depth}"
            run_dir.mkdir(parents=True, exist_ok=True)
            backend = make_backend(cfg.backend) if uses_backend else None
            est = FeatureTreeClassifier(
                mode=cfg.mode, max_depth=depth, random_state=seed,
                min_leaf_frac=cfg.induction.min_leaf_frac, kmer_k=cfg.induction.kmer_k,
                n_jobs=cfg.induction.n_jobs, backend=backend,
                task_description=cfg.task.description, regions=tuple(cfg.task.regions),
                transcript_path=(run_dir / "transcript.jsonl") if uses_backend else None,
                **cfg.generation.model_dump(),
            )
            est.fit(list(train.sequences), train.y, name=train.name)
            tree = est.tree_
            save_tree(tree, run_dir / "tree.json")
            m_train = _metrics_or_nan(est.predict_proba(list(train.sequences))[:, 1], train.y)
            m_test = _metrics_or_nan(est.predict_proba(list(test.sequences))[:, 1], test.y)
            hrows = halstead_rows(tree)
            _write_csv(run_dir / "halstead.csv", HALSTEAD_HEADER, hrows)
            med = halstead_medians(hrows)
            (run_dir / "metrics.json").write_text(json.dumps(
                {"train": m_train, "test": m_test, "halstead_median": med},
                indent=2, sort_keys=True) + "\n")
            row = {"mode": cfg.mode, "seed": seed, "depth": depth,
                   "n_internal": len(tree.internal_nodes()), "n_leaves": len(tree.leaves()),
                   "halstead_volume": med["volume"], "halstead_difficulty": med["difficulty"],
                   "halstead_effort": med["effort"]}
            row.update({f"train_{k}": v for k, v in m_train.items()})
            row.update({f"test_{k}": v for k, v in m_test.items()})
            results.append(row)
            summary_rows += [{**r, "seed": seed, "depth": depth} for r in hrows]
            if hasattr(backend, "close"):
                backend.close()

    _write_csv(out / "results.csv", RESULT_HEADER, results)
    aggregate = aggregate_results(results, cfg.mode, cfg.depths)
    _write_csv(out / "aggregate.csv", AGGREGATE_HEADER, aggregate)
    _write_csv(out / "halstead_summary.csv", ["statistic", "volume", "effort", "difficulty"],
               [{"statistic": "median_generated", **halstead_medians(summary_rows)},
                {"statistic": "median_all", **halstead_medians(summary_rows, False)}])
    return {"output_dir": str(out), "results": results, "aggregate": aggregate}


def aggregate_results(results: list[dict], mode: str, depths) -> list[dict]:
    """Mean and sample standard deviation over seeds for every depth."""
    rows = []
    for depth in depths:
        runs = [r for r in results if r["depth"] == depth]
        row = {"mode": mode, "depth": depth, "n_seeds": len(runs)}
        for split in ("train", "test"):
            for m in METRIC_NAMES:
                vals = [r[f"{split}_{m}"] for r in runs]
                row[f"{split}_{m}_mean"] = float(np.mean(vals))
                row[f"{split}_{m}_std"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        rows.append(row)
    return rows
