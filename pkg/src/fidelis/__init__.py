"""OOD-robust fidelity measures for subgraph explanations of graph classifiers."""

__version__ = "0.1.0"

from .graphs import (Edge, Explanation, Graph, LabeledGraph, contains_subgraph,
                     edit_distance, remove_edges, union_edges)
from .io import Dataset, read_dataset_jsonl, write_dataset_jsonl
from .sampling import perturb_explanation, sample_edges
from .classifiers import (BayesMotifClassifier, ClassDistribution,
                          ConstantClassifier, MotifRule, NoisyMotifClassifier,
                          TypicalSet, bayes_classify, classify,
                          motif_conditional, noisy_classify, typical_distance)
from .fidelity import (FidelityConfig, FidelityReport, fid_accuracy_variants,
                       fid_alpha_delta, fid_alpha_exact, fid_alpha_minus,
                       fid_alpha_plus, fid_original)
from .theory import (GraphDistribution, appendix_b_experiment, appendix_b_mi,
                     binary_entropy, check_condition1, check_well_behaved,
                     conditional_mi, e_max, fano_bound, prop3_enumerate,
                     prop4_monotonicity, reverse_fano, theorem1_eta,
                     theorem1_kappa)
from .evaluation import SweepConfig, SweepResult, auc_edges, run_sweep, spearman
from .bridge import BridgeClassifier

__all__ = [name for name in dir() if not name.startswith("_")]
