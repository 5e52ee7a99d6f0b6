"""Decision trees over DNA sequences with generated interpretable split features."""

from .estimator import FeatureTreeClassifier
from .metrics import Metrics, average_precision, compute_metrics
from .seqdata import SequenceDataset, load_csv, synth_motif
from .tree import DecisionTree, InductionConfig, grow_tree, load_tree, save_tree

__version__ = "0.1.0"

__all__ = [
    "DecisionTree", "FeatureTreeClassifier", "InductionConfig", "Metrics", "SequenceDataset",
    "average_precision", "compute_metrics", "grow_tree", "load_csv", "load_tree", "save_tree",
    "synth_motif",
]
