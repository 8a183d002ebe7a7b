"""Edge confidence for a fitted model: non-parametric and parametric
bootstrap supports, plus a hypergeometric co-occurrence test per edge.

Support of an edge is the fraction of replicate reconstructions containing
it. Non-parametric replicates resample rows of the input; parametric
replicates sample fresh datasets from the fitted model itself (clause
parents are drawn as independent gate variables, and only event columns are
emitted, so each replicate re-lifts its own patterns).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import hypergeom

from .dag import ProgressionDag
from .errors import ParameterError, ProgressaError
from .formulas import CnfHypothesis
from .inference import InferenceConfig, infer_progression
from .matrix import AlterationMatrix, matrix_from_array
from .rng import substream

MODES = ("nonparametric", "parametric")


@dataclass(frozen=True)
class EdgeConfidence:
    edge: tuple[str, str]
    support: float
    mode: str
    hypergeometric_p: float
    replicates: int
    failed_replicates: int


def sample_from_fitted(dag: ProgressionDag, events: tuple[str, ...], m: int, rng: np.random.Generator) -> AlterationMatrix:
    """Draw m rows from the fitted model's induced distribution: every node
    fires with its alpha once all parents are present; clause nodes are
    parentless so they act as independent Bernoulli gates. Only event columns
    are returned."""
    order = dag.topological_order()
    values: dict[str, np.ndarray] = {}
    for key in order:
        node = dag.nodes[key]
        gate = np.ones(m, dtype=bool)
        for p in dag.parents[key]:
            gate &= values[p] == 1
        fires = rng.random(m) < node.alpha
        values[key] = (gate & fires).astype(np.uint8)
    cols = [values[e] if e in values else np.zeros(m, dtype=np.uint8) for e in events]
    return matrix_from_array(np.column_stack(cols), events)


def hypergeometric_cooccurrence(parent_col: np.ndarray, child_col: np.ndarray) -> float:
    """Right-tail p-value for observing at least the seen overlap between two
    columns under draws without replacement (population m, successes = child
    support, draws = parent support)."""
    m = len(parent_col)
    draws = int(parent_col.sum())
    successes = int(child_col.sum())
    overlap = int((parent_col & child_col).sum())
    return float(hypergeom.sf(overlap - 1, m, successes, draws))


def edge_confidence(
    matrix: AlterationMatrix,
    hypotheses: tuple[CnfHypothesis, ...],
    fitted,
    iterations: int = 1000,
    mode: str = "nonparametric",
    seed: int = 0,
    config: InferenceConfig | None = None,
) -> dict[tuple[str, str], EdgeConfidence]:
    """Re-run the whole reconstruction on `iterations` replicate datasets and
    report, per fitted edge, the fraction of replicates that reproduce it.
    `fitted` is the InferenceResult being annotated."""
    if iterations < 1:
        raise ParameterError("iterations must be >= 1")
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}")
    config = config or fitted.config

    edges = fitted.dag.edges()
    if not edges:
        return {}
    counts = {e: 0 for e in edges}
    failed = 0
    m = matrix.m

    for it in range(iterations):
        rng = substream(seed, "confidence", mode, it)
        if mode == "nonparametric":
            idx = rng.integers(0, m, size=m)
            replicate = matrix_from_array(matrix.data[idx], matrix.events)
        else:
            replicate = sample_from_fitted(fitted.dag, matrix.events, m, rng)
        try:
            rerun = infer_progression(
                replicate, hypotheses, config=config, seed=int(rng.integers(0, 2**63 - 1))
            )
        except ProgressaError:
            failed += 1
            continue
        got = set(rerun.dag.edges())
        for e in edges:
            if e in got:
                counts[e] += 1

    effective = iterations - failed
    out: dict[tuple[str, str], EdgeConfidence] = {}
    lifted = fitted.lifted
    for e in edges:
        pcol = lifted.data[:, lifted.col(e[0])]
        ccol = lifted.data[:, lifted.col(e[1])]
        out[e] = EdgeConfidence(
            edge=e,
            support=counts[e] / effective if effective else 0.0,
            mode=mode,
            hypergeometric_p=hypergeometric_cooccurrence(pcol, ccol),
            replicates=iterations,
            failed_replicates=failed,
        )
    return out
