"""Selectivity scoring: temporal-priority and probability-raising margins,
bootstrap with rejection resampling, and one-sided Mann-Whitney U tests.

For a pair (i, j) the point margins are gamma = P(i) - P(j) and
lambda = P(j|i) - P(j|~i). Both strict inequalities are assessed by comparing
bootstrap distributions with a one-sided rank test: resampled marginals of i
against j for temporal priority, resampled P(j|i) against P(j|~i) for
probability raising.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc
from scipy.stats import rankdata

from .errors import BootstrapStarvationError, DegenerateUnitError, ParameterError


class TiesWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Mann-Whitney U, one-sided (H1: x stochastically greater than y)

_EXACT_MIN = 20  # below this min sample size the exact distribution is used


def _tie_sums(pooled: np.ndarray) -> np.ndarray:
    """sum(t^3 - t) over tie groups, per row of a (P, N) array."""
    P, N = pooled.shape
    s = np.sort(pooled, axis=1)
    new = np.ones_like(s, dtype=bool)
    new[:, 1:] = s[:, 1:] != s[:, :-1]
    gid = np.cumsum(new, axis=1) - 1
    flat = (gid + np.arange(P)[:, None] * N).ravel()
    counts = np.bincount(flat, minlength=P * N).reshape(P, N)
    return (counts.astype(np.float64) ** 3 - counts).sum(axis=1)


def mw_batch(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise one-sided p-values via the tie- and continuity-corrected
    normal approximation. x is (P, k1), y is (P, k2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k1, k2 = x.shape[1], y.shape[1]
    n = k1 + k2
    pooled = np.concatenate([x, y], axis=1)
    ranks = rankdata(pooled, axis=1)
    r1 = ranks[:, :k1].sum(axis=1)
    u1 = r1 - k1 * (k1 + 1) / 2.0
    mu = k1 * k2 / 2.0
    tie = _tie_sums(pooled)
    sigma2 = (k1 * k2 / 12.0) * ((n + 1) - tie / (n * (n - 1)))
    sigma = np.sqrt(np.clip(sigma2, 0.0, None))
    p = np.full(pooled.shape[0], 0.5)
    ok = sigma > 0
    z = (u1[ok] - mu - 0.5) / sigma[ok]
    p[ok] = 0.5 * erfc(z / math.sqrt(2.0))
    return p


def _exact_mid_p(x: np.ndarray, y: np.ndarray) -> float:
    """Exact permutation p-value (mid-p convention) of the rank-sum statistic,
    conditioning on the observed pooled values, ties included.

    mid-p = P(S > s_obs) + P(S = s_obs) / 2 over all equally likely
    assignments of the pooled values to the first sample. Counts are built
    with a subset-sum recursion over doubled midranks, which is exact for the
    sizes this branch handles.
    """
    n1 = len(x)
    pooled = np.concatenate([x, y])
    ranks2 = np.rint(rankdata(pooled) * 2).astype(np.int64)
    obs = int(ranks2[:n1].sum())
    max_s = int(ranks2.sum())
    ways = np.zeros((n1 + 1, max_s + 1), dtype=np.float64)
    ways[0, 0] = 1.0
    for r in ranks2:
        r = int(r)
        for c in range(n1, 0, -1):
            ways[c, r:] += ways[c - 1, : max_s + 1 - r]
    total = float(math.comb(len(pooled), n1))
    greater = float(ways[n1, obs + 1 :].sum())
    equal = float(ways[n1, obs])
    return (greater + 0.5 * equal) / total


def mann_whitney_one_sided(x, y) -> float:
    """One-sided p-value for H1: values of x tend to be larger than values
    of y. Exact (tie-aware, mid-p) when min(|x|, |y|) < 20, otherwise the
    corrected normal approximation. Completely tied inputs give 0.5 and a
    TiesWarning."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise ParameterError("both samples must be non-empty")
    if np.all(x == x[0]) and np.all(y == x[0]):
        warnings.warn("all values identical across both samples", TiesWarning, stacklevel=2)
        return 0.5
    if min(x.size, y.size) >= _EXACT_MIN:
        return float(mw_batch(x[None, :], y[None, :])[0])
    n = x.size + y.size
    if (min(x.size, y.size) + 1) * n * (n + 1) > 50_000_000:
        # degenerate unbalanced case: the subset-sum table would be huge and
        # the large sample dominates the null anyway
        return float(mw_batch(x[None, :], y[None, :])[0])
    return _exact_mid_p(x, y)


def benjamini_hochberg(pvals: np.ndarray) -> np.ndarray:
    """BH-adjusted p-values (monotone step-up)."""
    p = np.asarray(pvals, dtype=np.float64)
    n = p.size
    order = np.argsort(p)
    adj = np.empty(n)
    running = 1.0
    for rank_idx in range(n - 1, -1, -1):
        i = order[rank_idx]
        running = min(running, p[i] * n / (rank_idx + 1))
        adj[i] = running
    return adj


# ---------------------------------------------------------------------------
# Point-estimate margins


@dataclass
class ScorePair:
    """Margins and test p-values for an ordered pair (i selects j)."""

    gamma: float
    lam: float
    p_tp: float | None = None
    p_pr: float | None = None

    def significant(self, alpha: float) -> bool:
        if self.p_tp is None or self.p_pr is None:
            return False
        return self.p_tp < alpha and self.p_pr < alpha


def score_pair(probs, i: int, j: int) -> ScorePair:
    """Point margins from empirical probabilities; p-values left unset."""
    pi = float(probs.marginal[i])
    pj = float(probs.marginal[j])
    if pi <= 0.0 or pi >= 1.0:
        raise DegenerateUnitError(f"unit {i} has degenerate probability {pi}")
    pij = float(probs.joint[i, j])
    lam = pij / pi - (pj - pij) / (1.0 - pi)
    return ScorePair(gamma=pi - pj, lam=lam)


# ---------------------------------------------------------------------------
# Bootstrap with rejection resampling


@dataclass(frozen=True)
class BootstrapDistributions:
    """Per-unit resampled marginals and per-pair resampled joints.

    Every retained resample is jointly valid: all unit marginals lie in
    (0, 1) and no two unit columns coincide, so the derived conditionals
    P(j|i) and P(j|~i) are always defined.
    """

    keys: tuple[str, ...]
    marginals: np.ndarray  # (K, U)
    joints: np.ndarray  # (K, U, U)
    sample_count: int
    attempts: int
    rejected: int
    rejection_units: dict[str, int]

    @property
    def k(self) -> int:
        return int(self.marginals.shape[0])

    def index(self, key: str) -> int:
        return self.keys.index(key)

    def marginal_samples(self, i: int) -> np.ndarray:
        return self.marginals[:, i]

    def conditional_samples(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Resampled P(j|i) and P(j|~i)."""
        pi = self.marginals[:, i]
        pj = self.marginals[:, j]
        pij = self.joints[:, i, j]
        return pij / pi, (pj - pij) / (1.0 - pi)


def impossible_units(data: np.ndarray, keys: tuple[str, ...]) -> list[str]:
    """Units that can never satisfy the rejection criterion: constant columns
    and members of identical-column pairs (row resampling preserves both)."""
    m = data.shape[0]
    sums = data.sum(axis=0)
    bad = [keys[u] for u in range(len(keys)) if sums[u] in (0, m)]
    seen: dict[bytes, str] = {}
    for u, key in enumerate(keys):
        blob = data[:, u].tobytes()
        if blob in seen:
            bad.extend([seen[blob], key])
        else:
            seen[blob] = key
    return sorted(set(bad))


def bootstrap_distributions(
    data,
    keys: tuple[str, ...] | None = None,
    k: int = 100,
    max_attempts: int | None = None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> BootstrapDistributions:
    """Resample rows with replacement until k jointly valid resamples are
    retained. A resample is rejected if any unit has marginal 0 or 1 or any
    two units have identical resampled columns (both conditionals equal 1).

    `data` is an (m, U) binary array with `keys` naming its columns, or a
    LiftedMatrix. Deterministic for a fixed seed; raises
    BootstrapStarvationError (naming the offending units) when max_attempts
    resamples were not enough.
    """
    if keys is None:
        keys = data.keys
        data = data.data
    if k < 1:
        raise ParameterError("k must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    if max_attempts is None:
        max_attempts = 100 * k
    m, u = data.shape

    impossible = impossible_units(data, keys)
    if impossible:
        raise BootstrapStarvationError(
            "bootstrap can never satisfy the rejection criterion; "
            "degenerate or duplicated units: " + ", ".join(impossible),
            units=tuple(impossible),
        )

    x = data.astype(np.float32)
    offdiag = ~np.eye(u, dtype=bool)
    kept_marg: list[np.ndarray] = []
    kept_joint: list[np.ndarray] = []
    kept = 0
    attempts = 0
    rejection_units: dict[str, int] = {}

    while kept < k:
        if attempts >= max_attempts:
            worst = sorted(rejection_units, key=rejection_units.get, reverse=True)[:5]
            raise BootstrapStarvationError(
                f"only {kept}/{k} valid resamples after {attempts} attempts; "
                "most rejected units: " + ", ".join(worst),
                units=tuple(worst),
            )
        batch = k
        idx = rng.integers(0, m, size=(batch, m))
        res = x[idx]  # (batch, m, u)
        counts = res.sum(axis=1)  # marginal counts
        joint_counts = np.matmul(res.transpose(0, 2, 1), res)  # (batch, u, u)

        degen = (counts <= 0) | (counts >= m)
        ident = (
            (joint_counts == counts[:, :, None])
            & (joint_counts == counts[:, None, :])
            & offdiag[None, :, :]
        )
        ok = ~degen.any(axis=1) & ~ident.any(axis=(1, 2))

        for ui in np.nonzero(degen.any(axis=0))[0]:
            rejection_units[keys[ui]] = rejection_units.get(keys[ui], 0) + int(degen[:, ui].sum())
        for ui in np.nonzero(ident.any(axis=(0, 2)))[0]:
            rejection_units[keys[ui]] = rejection_units.get(keys[ui], 0) + int(ident[:, ui, :].any(axis=1).sum())

        attempts += batch
        if ok.any():
            kept_marg.append(counts[ok] / m)
            kept_joint.append(joint_counts[ok] / m)
            kept += int(ok.sum())

    marg = np.concatenate(kept_marg, axis=0)[:k].astype(np.float64)
    joint = np.concatenate(kept_joint, axis=0)[:k].astype(np.float64)
    return BootstrapDistributions(
        keys=tuple(keys),
        marginals=marg,
        joints=joint,
        sample_count=m,
        attempts=attempts,
        rejected=attempts - kept,
        rejection_units=rejection_units,
    )


# ---------------------------------------------------------------------------
# Selectivity assessment


def assess_selectivity(dists: BootstrapDistributions, i: int, j: int, point_probs=None) -> ScorePair:
    """Score one ordered pair: temporal priority p-value from the marginal
    distributions, probability raising from the conditional distributions.
    Point margins come from `point_probs` when given, else from bootstrap
    means."""
    if point_probs is not None:
        base = score_pair(point_probs, i, j)
        gamma, lam = base.gamma, base.lam
    else:
        pji, pjni = dists.conditional_samples(i, j)
        gamma = float((dists.marginals[:, i] - dists.marginals[:, j]).mean())
        lam = float((pji - pjni).mean())
    p_tp = mann_whitney_one_sided(dists.marginals[:, i], dists.marginals[:, j])
    pji, pjni = dists.conditional_samples(i, j)
    p_pr = mann_whitney_one_sided(pji, pjni)
    return ScorePair(gamma=gamma, lam=lam, p_tp=p_tp, p_pr=p_pr)


def assess_pairs(
    dists: BootstrapDistributions,
    pairs: list[tuple[int, int]],
    point_probs,
    fdr: bool = False,
) -> dict[tuple[int, int], ScorePair]:
    """Assessment of many ordered pairs at once: batched rank tests on the K
    resampled statistics (the exact branch applies when K is small)."""
    if not pairs:
        return {}
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])
    marg_i = dists.marginals[:, ii].T  # (P, K)
    marg_j = dists.marginals[:, jj].T
    pij = dists.joints[:, ii, jj].T
    cond = pij / marg_i
    cond_not = (marg_j - pij) / (1.0 - marg_i)
    if dists.k >= _EXACT_MIN:
        p_tp = mw_batch(marg_i, marg_j)
        p_pr = mw_batch(cond, cond_not)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TiesWarning)
            p_tp = np.array([mann_whitney_one_sided(marg_i[r], marg_j[r]) for r in range(len(pairs))])
            p_pr = np.array([mann_whitney_one_sided(cond[r], cond_not[r]) for r in range(len(pairs))])
    if fdr:
        p_tp = benjamini_hochberg(p_tp)
        p_pr = benjamini_hochberg(p_pr)

    out: dict[tuple[int, int], ScorePair] = {}
    for idx, (i, j) in enumerate(pairs):
        base = score_pair(point_probs, i, j)
        out[(i, j)] = ScorePair(
            gamma=base.gamma, lam=base.lam, p_tp=float(p_tp[idx]), p_pr=float(p_pr[idx])
        )
    return out
