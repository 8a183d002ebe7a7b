"""Progression inference: prima facie topology from the selectivity tests,
loop disentangling, and BIC-regularized likelihood pruning.

The pipeline is a pure function of (matrix, hypotheses, config, seed):

1. drop flagged columns (unless forced) and lift the matrix;
2. bootstrap with rejection resampling, rank-test every candidate pair;
3. build the prima facie DAG: an edge needs significant probability raising
   and a temporal order that is not significantly reversed; a pattern
   contributes its clauses as parents of its target under the same test on
   the whole pattern column;
4. remove any residual loops, least confident edge first;
5. prune spurious parents by greedy BIC hill-climbing over the prima facie
   edges, then relabel the surviving structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .dag import DagNode, ProgressionDag
from .errors import BindingError, ParameterError, ParentCapError
from .formulas import CnfHypothesis, LiftedMatrix, atoms_of, lift
from .matrix import AlterationMatrix, estimate_probabilities
from .rng import spawn_seed
from .stats import ScorePair, assess_pairs, bootstrap_distributions, impossible_units


@dataclass(frozen=True)
class InferenceConfig:
    alpha: float = 0.05
    bootstrap_k: int = 100
    bootstrap_max_attempt_factor: int = 100
    parent_cap: int = 10
    fdr: bool = False
    algorithm: str = "full"  # 'full' | 'prima-facie'
    force: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError("alpha must lie in (0, 1)")
        if self.bootstrap_k < 1:
            raise ParameterError("bootstrap_k must be >= 1")
        if self.algorithm not in ("full", "prima-facie"):
            raise ParameterError(f"unknown algorithm '{self.algorithm}'")


EdgeStats = dict[tuple[str, str], ScorePair]


# ---------------------------------------------------------------------------
# Prima facie topology (steps 3-5)


def candidate_pairs(lifted: LiftedMatrix) -> list[tuple[int, int]]:
    """Ordered pairs to assess: every ordered event pair, plus each
    hypothesis gate column against its target (both orders, so the reverse
    temporal-priority test is available)."""
    n = lifted.base.n
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    seen = set(pairs)
    keys = lifted.keys
    for h_idx, h in enumerate(lifted.hypotheses):
        gate = keys.index(lifted.gate_key[h_idx])
        target = keys.index(h.target)
        for pair in ((gate, target), (target, gate)):
            if pair not in seen:
                seen.add(pair)
                pairs.append(pair)
    return pairs


def prima_facie_topology(
    lifted: LiftedMatrix,
    scores: dict[tuple[int, int], ScorePair],
    alpha: float,
) -> tuple[ProgressionDag, EdgeStats]:
    """Assemble the pre-pruning DAG from assessed pairs. Clause nodes are
    always parentless.

    An edge i -> j is admitted when probability raising is significant and
    positive and temporal priority does not significantly point the other way
    (p_tp of j -> i above alpha). Pairs whose temporal order the data cannot
    resolve may therefore enter in both orientations; such loops are
    disentangled afterwards, least confident edge first.
    """
    keys = lifted.keys
    events = lifted.base.events
    dag = ProgressionDag()
    for name in events:
        dag.add_node(DagNode(key=name, kind="event"))
    for unit in lifted.units:
        if unit.clause is not None:
            dag.add_node(DagNode(key=unit.key, kind="clause", clause=unit.clause))

    def accepted(i: int, j: int) -> bool:
        sp = scores[(i, j)]
        if not (sp.lam > 0 and sp.p_pr is not None and sp.p_pr < alpha):
            return False
        reverse = scores.get((j, i))
        return reverse is None or reverse.p_tp >= alpha

    stats: EdgeStats = {}
    n = len(events)
    for (i, j) in scores:
        if i < n and j < n and accepted(i, j):
            dag.add_edge(events[i], events[j])
            stats[(events[i], events[j])] = scores[(i, j)]

    for h_idx, h in enumerate(lifted.hypotheses):
        gate = keys.index(lifted.gate_key[h_idx])
        target_idx = keys.index(h.target)
        sp = scores[(gate, target_idx)]
        if not accepted(gate, target_idx):
            continue
        for ckey in lifted.clause_keys[h_idx]:
            if ckey == h.target:
                continue
            dag.add_edge(ckey, h.target)
            stats.setdefault((ckey, h.target), sp)

    if not lifted.hypotheses:
        assert all(node.kind == "event" for node in dag.nodes.values())
    return dag, stats


# ---------------------------------------------------------------------------
# Loop removal


def break_loops(dag: ProgressionDag, stats: EdgeStats) -> ProgressionDag:
    """Drop loop-forming edges, least confident first. Confidence of an edge
    is its worst p-value (max of temporal priority and probability raising);
    an edge is removed only if it still lies on a cycle when visited."""
    out = dag.copy()

    def badness(edge: tuple[str, str]) -> tuple:
        sp = stats.get(edge)
        combined = max(sp.p_tp, sp.p_pr) if sp and sp.p_tp is not None else 1.0
        return (-combined, edge)

    for parent, child in sorted(out.edges(), key=badness):
        # the edge lies on a cycle iff its child still reaches its parent
        if out.has_path(child, parent):
            out.remove_edge(parent, child)
    return out


# ---------------------------------------------------------------------------
# Likelihood and BIC


def _column_index(lifted: LiftedMatrix) -> dict[str, int]:
    return {key: idx for idx, key in enumerate(lifted.keys)}


def _local_log_likelihood(data: np.ndarray, child_col: int, parent_cols: tuple[int, ...]) -> float:
    """Maximum-likelihood categorical log-likelihood contribution of one node
    given its parent set, with 0 log 0 = 0."""
    child = data[:, child_col].astype(np.float64)
    m = data.shape[0]
    if not parent_cols:
        n1 = child.sum()
        n0 = m - n1
        return float(xlogy(n1, n1 / m) + xlogy(n0, n0 / m))
    weights = 1 << np.arange(len(parent_cols), dtype=np.int64)
    config = data[:, list(parent_cols)].astype(np.int64) @ weights
    size = 1 << len(parent_cols)
    n_u = np.bincount(config, minlength=size).astype(np.float64)
    n_1 = np.bincount(config, weights=child, minlength=size)
    n_0 = n_u - n_1
    nz = n_u > 0
    return float(
        (xlogy(n_1[nz], n_1[nz]) + xlogy(n_0[nz], n_0[nz]) - xlogy(n_u[nz], n_u[nz])).sum()
    )


def log_likelihood(dag: ProgressionDag, lifted: LiftedMatrix) -> float:
    """Joint categorical log-likelihood of the data under the DAG with
    maximum-likelihood conditional probability tables."""
    cols = _column_index(lifted)
    total = 0.0
    for child in sorted(dag.nodes):
        pcols = tuple(sorted(cols[p] for p in dag.parents[child]))
        total += _local_log_likelihood(lifted.data, cols[child], pcols)
    return total


def dimension(dag: ProgressionDag) -> int:
    """Free-parameter count: one Bernoulli table row per parent configuration."""
    return sum(1 << len(dag.parents[k]) for k in dag.nodes)


def bic_score(dag: ProgressionDag, lifted: LiftedMatrix, parent_cap: int = 10) -> float:
    """log-likelihood minus (log m / 2) * dimension."""
    for child, ps in dag.parents.items():
        if len(ps) > parent_cap:
            raise ParentCapError(
                f"node '{child}' has {len(ps)} parents, above the cap {parent_cap}"
            )
    m = lifted.m
    return log_likelihood(dag, lifted) - (math.log(m) / 2.0) * dimension(dag)


# ---------------------------------------------------------------------------
# Likelihood fit (step 6)


def likelihood_fit(
    dag: ProgressionDag,
    lifted: LiftedMatrix,
    stats: EdgeStats,
    parent_cap: int = 10,
) -> ProgressionDag:
    """Greedy hill-climbing over subgraphs of the prima facie DAG: starting
    from the empty graph, repeatedly apply the single edge addition or removal
    with the best BIC improvement. Candidates are the prima facie edges only;
    removed edges may be re-added. Deterministic: candidates are visited by
    ascending probability-raising p-value."""
    data = lifted.data
    cols = _column_index(lifted)
    m = lifted.m
    log_m_half = math.log(m) / 2.0

    def order_key(edge: tuple[str, str]) -> tuple:
        sp = stats.get(edge)
        return (sp.p_pr if sp and sp.p_pr is not None else 1.0, edge)

    candidates = sorted(dag.edges(), key=order_key)
    current: dict[str, frozenset[str]] = {k: frozenset() for k in dag.nodes}
    score_cache: dict[tuple[str, frozenset[str]], float] = {}

    def local_score(child: str, pset: frozenset[str]) -> float:
        key = (child, pset)
        if key not in score_cache:
            pcols = tuple(sorted(cols[p] for p in pset))
            ll = _local_log_likelihood(data, cols[child], pcols)
            score_cache[key] = ll - log_m_half * (1 << len(pset))
        return score_cache[key]

    while True:
        best_delta = 0.0
        best_move: tuple[str, frozenset[str]] | None = None
        for parent, child in candidates:
            pset = current[child]
            if parent in pset:
                nxt = pset - {parent}
            else:
                if len(pset) + 1 > parent_cap:
                    continue
                nxt = pset | {parent}
            delta = local_score(child, nxt) - local_score(child, pset)
            if delta > best_delta + 1e-12:
                best_delta = delta
                best_move = (child, nxt)
        if best_move is None:
            break
        current[best_move[0]] = best_move[1]

    fitted = dag.copy()
    for child in fitted.nodes:
        fitted.parents[child] = set(current[child])
    _drop_isolated_clauses(fitted)
    return fitted


def _drop_isolated_clauses(dag: ProgressionDag) -> None:
    used: set[str] = set()
    for ps in dag.parents.values():
        used |= ps
    for key in [k for k, n in dag.nodes.items() if n.kind == "clause" and k not in used]:
        del dag.nodes[key]
        del dag.parents[key]


def apply_labeling(dag: ProgressionDag, lifted: LiftedMatrix) -> None:
    """Step-5 labeling on the current parent sets: alpha is the marginal for
    parentless nodes and the conditional given the conjunction of all parents
    otherwise (0 when the conjunction never occurs)."""
    data = lifted.data
    cols = _column_index(lifted)
    for key, node in dag.nodes.items():
        col = data[:, cols[key]]
        node.marginal = float(col.mean())
        ps = sorted(dag.parents[key])
        if not ps:
            node.alpha = node.marginal
            continue
        mask = np.ones(data.shape[0], dtype=bool)
        for p in ps:
            mask &= data[:, cols[p]] == 1
        node.alpha = float(col[mask].mean()) if mask.any() else 0.0


# ---------------------------------------------------------------------------
# Full pipeline


@dataclass
class InferenceResult:
    catalog: tuple[str, ...]
    dropped: tuple[str, ...]
    dag: ProgressionDag
    prima_facie: ProgressionDag
    edge_stats: EdgeStats
    pair_scores: dict[tuple[str, str], ScorePair]
    hypotheses: tuple[CnfHypothesis, ...]
    lifted: LiftedMatrix
    config: InferenceConfig
    seed: int
    bootstrap_attempts: int = 0
    bootstrap_rejected: int = 0
    warnings: tuple[str, ...] = ()
    confidence: dict | None = None

    def event_edges(self) -> set[tuple[str, str]]:
        return self.dag.event_edges()


def infer_progression(
    matrix: AlterationMatrix,
    hypotheses: tuple[CnfHypothesis, ...] = (),
    config: InferenceConfig | None = None,
    seed: int = 0,
) -> InferenceResult:
    """Run the full reconstruction on one dataset."""
    config = config or InferenceConfig()
    notes: list[str] = []
    invalid = matrix.invalid_columns()
    if invalid and not config.force:
        notes.extend(matrix.validation.messages())
        notes.append("excluded from inference: " + ", ".join(sorted(invalid)))
        work = matrix.drop_columns(invalid)
        dropped = tuple(sorted(invalid))
    else:
        if invalid:
            notes.extend(matrix.validation.messages())
            notes.append("kept (forced): " + ", ".join(sorted(invalid)))
        work = matrix
        dropped = ()

    usable: list[CnfHypothesis] = []
    for h in hypotheses:
        referenced = atoms_of(h.formula) | {h.target}
        unknown = referenced - set(matrix.events)
        if unknown:
            raise BindingError(
                f"atom '{sorted(unknown)[0]}' is not bound to any event"
            )
        excluded = referenced - set(work.events)
        if excluded:
            notes.append(
                f"hypothesis {h.key()[0]} -> {h.target} skipped: "
                "references excluded event(s) " + ", ".join(sorted(excluded))
            )
        else:
            usable.append(h)
    hypotheses = tuple(usable)

    # a pattern whose lifted column is constant or duplicates another column
    # can never pass rejection resampling; exclude it like a flagged column
    while True:
        lifted = lift(work, hypotheses)
        unit_keys = {u.key for u in lifted.units}
        bad_units = set(impossible_units(lifted.data, lifted.keys)) & unit_keys
        if not bad_units:
            break
        victims = {
            h_idx
            for unit in lifted.units
            if unit.key in bad_units
            for (h_idx, _) in unit.origins
        }
        for h_idx in sorted(victims, reverse=True):
            h = hypotheses[h_idx]
            notes.append(
                f"hypothesis {h.key()[0]} -> {h.target} skipped: its lifted "
                "column is constant or indistinguishable from another column"
            )
        hypotheses = tuple(h for i, h in enumerate(hypotheses) if i not in victims)

    dists = bootstrap_distributions(
        lifted.data,
        lifted.keys,
        k=config.bootstrap_k,
        max_attempts=config.bootstrap_max_attempt_factor * config.bootstrap_k,
        seed=spawn_seed(seed, "bootstrap"),
    )
    probs = estimate_probabilities(lifted.data)
    pairs = candidate_pairs(lifted)
    scores = assess_pairs(dists, pairs, probs, fdr=config.fdr)

    pf_raw, stats = prima_facie_topology(lifted, scores, config.alpha)
    pf = break_loops(pf_raw, stats)
    apply_labeling(pf, lifted)

    if config.algorithm == "full":
        fitted = likelihood_fit(pf, lifted, stats, parent_cap=config.parent_cap)
    else:
        fitted = pf.copy()
    apply_labeling(fitted, lifted)

    if not hypotheses:
        assert all(n.kind == "event" for n in fitted.nodes.values())

    keys = lifted.keys
    named_scores = {
        (keys[i], keys[j]): sp for (i, j), sp in scores.items()
    }
    return InferenceResult(
        catalog=matrix.events,
        dropped=dropped,
        dag=fitted,
        prima_facie=pf,
        edge_stats=stats,
        pair_scores=named_scores,
        hypotheses=tuple(hypotheses),
        lifted=lifted,
        config=config,
        seed=seed,
        bootstrap_attempts=dists.attempts,
        bootstrap_rejected=dists.rejected,
        warnings=tuple(notes),
    )
