"""progressa: progression model inference from cross-sectional binary data."""

__version__ = "0.1.0"

from .confidence import EdgeConfidence, edge_confidence
from .dag import DagNode, ProgressionDag
from .errors import ProgressaError
from .evaluation import (
    ExperimentGrid,
    ReconstructionScore,
    compare_edge_sets,
    run_grid,
    score_reconstruction,
)
from .formulas import (
    CnfHypothesis,
    LiftedMatrix,
    canonicalize,
    evaluate,
    format_formula,
    lift,
    parse_formula,
    parse_hypothesis,
)
from .generator import (
    GenerativeModel,
    NoiseSpec,
    generate_lethality_model,
    generate_model,
    genotype_probability,
    sample_dataset,
)
from .inference import (
    InferenceConfig,
    InferenceResult,
    bic_score,
    break_loops,
    infer_progression,
    likelihood_fit,
    log_likelihood,
)
from .matrix import (
    AlterationMatrix,
    EmpiricalProbabilities,
    estimate_probabilities,
    load_matrix,
    matrix_from_array,
    save_matrix,
)
from .stats import (
    BootstrapDistributions,
    ScorePair,
    assess_selectivity,
    bootstrap_distributions,
    mann_whitney_one_sided,
    score_pair,
)

__all__ = [
    "AlterationMatrix",
    "BootstrapDistributions",
    "CnfHypothesis",
    "DagNode",
    "EdgeConfidence",
    "EmpiricalProbabilities",
    "ExperimentGrid",
    "GenerativeModel",
    "InferenceConfig",
    "InferenceResult",
    "LiftedMatrix",
    "NoiseSpec",
    "ProgressaError",
    "ProgressionDag",
    "ReconstructionScore",
    "ScorePair",
    "assess_selectivity",
    "bic_score",
    "bootstrap_distributions",
    "break_loops",
    "canonicalize",
    "compare_edge_sets",
    "edge_confidence",
    "estimate_probabilities",
    "evaluate",
    "format_formula",
    "generate_lethality_model",
    "generate_model",
    "genotype_probability",
    "infer_progression",
    "lift",
    "likelihood_fit",
    "load_matrix",
    "log_likelihood",
    "mann_whitney_one_sided",
    "matrix_from_array",
    "parse_formula",
    "parse_hypothesis",
    "run_grid",
    "sample_dataset",
    "save_matrix",
    "score_pair",
    "score_reconstruction",
]
