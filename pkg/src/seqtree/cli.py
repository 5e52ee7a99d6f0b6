"""Command-line entry point: ``seqtree <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .experiment import ConfigError, halstead_medians, halstead_rows, load_config, run_experiment
from .metrics import compute_metrics
from .seqdata import DatasetError, load_csv, synth_motif
from .tree import TreeDocumentError, format_tree, load_tree, predict_proba


def _cmd_synth(args) -> int:
    ds = synth_motif(args.n, args.len, args.motif, not args.unbalanced, args.seed)
    ds.to_csv(args.out)
    print(f"wrote {len(ds)} rows ({sum(ds.labels)} positive) to {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    report = run_experiment(cfg, args.out)
    for row in report["aggregate"]:
        print(f"depth {row['depth']}: test accuracy {row['test_accuracy_mean']:.3f} "
              f"+/- {row['test_accuracy_std']:.3f}  auprc {row['test_auprc_mean']:.3f}")
    print(f"reports in {report['output_dir']}")
    return 0


def _cmd_predict(args) -> int:
    tree = load_tree(args.tree)
    ds = load_csv(args.data)
    p1 = predict_proba(tree, list(ds.sequences))
    thr = tree.config.get("label_threshold", 0.5)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "p1", "label"])
        for i, p in enumerate(p1.tolist()):
            w.writerow([i, repr(p), int(p > thr)])
    print(f"wrote {len(p1)} predictions to {args.out}")
    return 0


def read_predictions(path) -> list[float]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "p1" not in reader.fieldnames:
            raise DatasetError(f"{path}: expected a 'p1' column")
        return [float(r["p1"]) for r in reader]


def _cmd_eval(args) -> int:
    p1 = read_predictions(args.predictions)
    ds = load_csv(args.data)
    if len(p1) != len(ds):
        raise DatasetError(f"{len(p1)} predictions for {len(ds)} labelled rows")
    m = compute_metrics(p1, list(ds.labels)).as_dict()
    for k, v in m.items():
        print(f"{k:<10}{v:.3f}")
    if args.out:
        Path(args.out).write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_inspect(args) -> int:
    print(format_tree(load_tree(args.tree)))
    return 0


def _cmd_halstead(args) -> int:
    tree = load_tree(args.tree)
    rows = halstead_rows(tree)
    print(f"{'node':>4}  {'volume':>8}  {'difficulty':>10}  {'effort':>8}  expr")
    for r in rows:
        print(f"{r['node']:>4}  {r['volume']:>8.2f}  {r['difficulty']:>10.2f}  "
              f"{r['effort']:>8.2f}  {r['expr']}")
    for label, only_gen in (("median (generated)", True), ("median (all)", False)):
        med = halstead_medians(rows, only_gen)
        print(f"{label}: volume {med['volume']:.2f}, effort {med['effort']:.2f}, "
              f"difficulty {med['difficulty']:.2f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqtree", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic motif dataset CSV")
    s.add_argument("--motif", default="TATA")
    s.add_argument("--n", type=int, default=6000)
    s.add_argument("--len", type=int, default=101)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--unbalanced", action="store_true",
                   help="keep the natural label rate instead of a 50/50 split")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_synth)

    t = sub.add_parser("train", help="run a seed x depth sweep from a config file")
    t.add_argument("--config", required=True, help="JSON or YAML run configuration")
    t.add_argument("--out", help="override output_dir from the config")
    t.set_defaults(func=_cmd_train)

    pr = sub.add_parser("predict", help="score a CSV with a saved tree")
    pr.add_argument("--tree", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=_cmd_predict)

    e = sub.add_parser("eval", help="metrics of a prediction CSV against labels")
    e.add_argument("--predictions", required=True)
    e.add_argument("--data", required=True, help="CSV with raw_sequence,label")
    e.add_argument("--out", help="write full-precision metrics JSON here")
    e.set_defaults(func=_cmd_eval)

    i = sub.add_parser("inspect", help="print a tree document")
    i.add_argument("tree")
    i.set_defaults(func=_cmd_inspect)

    h = sub.add_parser("halstead", help="complexity table of a tree's split features")
    h.add_argument("tree")
    h.set_defaults(func=_cmd_halstead)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config:\n{exc}", file=sys.stderr)
        return 2
    except (DatasetError, TreeDocumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
