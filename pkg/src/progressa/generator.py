"""Random progression model generation and dataset sampling.

Topology classes: trees, forests, connected DAGs and disconnected DAGs.
A connected instance assigns the root to level 1 and every other event to a
level in [2, ceil(log n)], each level non-empty; parents are drawn from the
previous level, at most w* of them. The label schedule is
alpha(root) ~ U[p_min, p_max] and alpha(j) = y * prod(alpha(parents)) with
y ~ U[p_min, p_max], so expected occurrence decays with depth.

Sampling walks nodes in topological order: a node with its gate satisfied
(all parents present under conjunctive semantics, at least one under
disjunctive) fires with its conditional rate y; otherwise it stays 0. For
trees the label alpha(j) then equals the marginal occurrence probability
exactly. Noise replaces each emitted bit by a fair coin with probability nu,
so each entry flips with probability nu/2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SchemaError
from .matrix import AlterationMatrix, matrix_from_array
from .rng import substream

TOPOLOGIES = ("tree", "forest", "connected_dag", "disconnected_dag")
SEMANTICS = ("conjunctive", "disjunctive", "xor_lethality")

P_MIN_DEFAULT = 0.05
P_MAX_DEFAULT = 0.95


@dataclass(frozen=True)
class NoiseSpec:
    """Total noise rate nu; false positive and negative rates are both nu/2."""

    nu: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.nu < 1.0:
            raise ParameterError("nu must lie in [0, 1)")

    @property
    def epsilon_plus(self) -> float:
        return self.nu / 2.0

    @property
    def epsilon_minus(self) -> float:
        return self.nu / 2.0


@dataclass
class GenerativeModel:
    """Ground-truth DAG with conditional rates, labels and pattern semantics."""

    events: tuple[str, ...]
    parents: dict[str, tuple[str, ...]]
    cond: dict[str, float]  # firing probability given the parent gate
    alpha: dict[str, float]  # label schedule: y * prod(alpha(parents))
    topology_class: str
    pattern_semantics: str = "conjunctive"
    branch_weights: dict[str, float] = field(default_factory=dict)  # xor models

    @property
    def n(self) -> int:
        return len(self.events)

    def roots(self) -> tuple[str, ...]:
        return tuple(e for e in self.events if not self.parents[e])

    def topological_order(self) -> list[str]:
        order: list[str] = []
        placed: set[str] = set()
        pending = list(self.events)
        while pending:
            progressed = False
            for e in list(pending):
                if all(p in placed for p in self.parents[e]):
                    order.append(e)
                    placed.add(e)
                    pending.remove(e)
                    progressed = True
            if not progressed:
                raise ParameterError("parent map contains a cycle")
        return order

    def depth(self, event: str) -> int:
        ps = self.parents[event]
        if not ps:
            return 1
        return 1 + max(self.depth(p) for p in ps)

    def true_edges(self) -> set[tuple[str, str]]:
        """Ground-truth directed edges over atomic events."""
        return {(p, c) for c, ps in self.parents.items() for p in ps}

    def true_patterns(self) -> list[tuple[str, str]]:
        """(pattern, target) pairs implied by the parent map."""
        out = []
        for child in self.events:
            ps = self.parents[child]
            if not ps:
                continue
            if self.pattern_semantics == "disjunctive" and len(ps) > 1:
                out.append(("(" + " | ".join(ps) + ")", child))
            elif self.pattern_semantics == "xor_lethality":
                out.append(("(" + " ^ ".join(ps) + ")", child))
            else:
                out.append((" & ".join(ps), child))
        return out

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "generative_model",
            "topology_class": self.topology_class,
            "pattern_semantics": self.pattern_semantics,
            "events": list(self.events),
            "parents": {e: list(ps) for e, ps in self.parents.items()},
            "cond": self.cond,
            "alpha": self.alpha,
            "branch_weights": self.branch_weights,
            "true_edges": sorted(list(e) for e in self.true_edges()),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_model(path) -> GenerativeModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "generative_model" or doc.get("schema_version") != 1:
        raise SchemaError(f"{path} is not a v1 generative model file")
    return GenerativeModel(
        events=tuple(doc["events"]),
        parents={e: tuple(ps) for e, ps in doc["parents"].items()},
        cond={e: float(v) for e, v in doc["cond"].items()},
        alpha={e: float(v) for e, v in doc["alpha"].items()},
        topology_class=doc["topology_class"],
        pattern_semantics=doc.get("pattern_semantics", "conjunctive"),
        branch_weights=doc.get("branch_weights", {}),
    )


# ---------------------------------------------------------------------------
# Model generation


def max_depth(n: int) -> int:
    """Level budget: the root level plus ceil(log n) - 1 further levels."""
    return max(2, math.ceil(math.log(n))) if n > 1 else 1


def _generate_connected(
    names: list[str],
    w_star: int,
    p_min: float,
    p_max: float,
    rng: np.random.Generator,
) -> tuple[dict[str, tuple[str, ...]], dict[str, float], dict[str, float]]:
    n = len(names)
    parents: dict[str, tuple[str, ...]] = {names[0]: ()}
    cond: dict[str, float] = {}
    alpha: dict[str, float] = {}
    root = names[0]
    if n == 1:
        cond[root] = float(rng.uniform(p_min, p_max))
        alpha[root] = cond[root]
        return parents, cond, alpha

    depth = min(max_depth(n), n)
    others = names[1:]
    levels: dict[int, list[str]] = {1: [root]}
    # one event per level keeps every level non-empty; the rest go anywhere
    slots = list(range(2, depth + 1))
    assignment = slots + [int(rng.integers(2, depth + 1)) for _ in range(len(others) - len(slots))]
    rng.shuffle(others)
    for name, level in zip(others, assignment):
        levels.setdefault(level, []).append(name)

    cond[root] = float(rng.uniform(p_min, p_max))
    alpha[root] = cond[root]
    for level in range(2, depth + 1):
        prev = levels[level - 1]
        for name in levels.get(level, []):
            width = int(rng.integers(1, min(w_star, len(prev)) + 1))
            chosen = rng.choice(len(prev), size=width, replace=False)
            parents[name] = tuple(sorted(prev[c] for c in chosen))
            y = float(rng.uniform(p_min, p_max))
            cond[name] = y
            alpha[name] = y * float(np.prod([alpha[p] for p in parents[name]]))
    return parents, cond, alpha


def _compose_sizes(n: int, components: int, rng: np.random.Generator) -> list[int]:
    """Uniform random composition of n into `components` positive parts."""
    if components > n:
        raise ParameterError(f"cannot split {n} events into {components} components")
    if components == 1:
        return [n]
    cuts = np.sort(rng.choice(np.arange(1, n), size=components - 1, replace=False))
    bounds = np.concatenate([[0], cuts, [n]])
    return list(np.diff(bounds).astype(int))


def generate_model(
    n: int,
    topology: str = "tree",
    w_star: int = 1,
    p_min: float = P_MIN_DEFAULT,
    p_max: float = P_MAX_DEFAULT,
    seed: int = 0,
    pattern_semantics: str = "conjunctive",
) -> GenerativeModel:
    """Draw a random ground-truth progression model of the requested class."""
    if topology not in TOPOLOGIES:
        raise ParameterError(f"unknown topology '{topology}'")
    if pattern_semantics not in ("conjunctive", "disjunctive"):
        raise ParameterError(f"unknown pattern semantics '{pattern_semantics}'")
    if n < 2:
        raise ParameterError("need at least 2 events")
    if w_star < 1:
        raise ParameterError("w_star must be >= 1")
    if topology in ("tree", "forest"):
        w_star = 1

    rng = substream(seed, "model", topology, n)
    names = [f"e{idx:02d}" for idx in range(n)]

    if topology in ("tree", "connected_dag"):
        sizes = [n]
    else:
        components = int(rng.integers(2, min(4, n) + 1))
        sizes = _compose_sizes(n, components, rng)

    parents: dict[str, tuple[str, ...]] = {}
    cond: dict[str, float] = {}
    alpha: dict[str, float] = {}
    start = 0
    for size in sizes:
        block = names[start : start + size]
        p, c, a = _generate_connected(block, w_star, p_min, p_max, rng)
        parents.update(p)
        cond.update(c)
        alpha.update(a)
        start += size

    return GenerativeModel(
        events=tuple(names),
        parents=parents,
        cond=cond,
        alpha=alpha,
        topology_class=topology,
        pattern_semantics=pattern_semantics,
    )


def generate_lethality_model(
    p_preferential: float = 0.7,
    seed: int = 0,
    branch_prob: float = 0.65,
    target_prob: float = 0.8,
) -> GenerativeModel:
    """Three-event exclusivity model: a sample follows the first branch with
    probability `p_preferential`, the second otherwise, never both; the target
    fires only when one branch is active."""
    if not 0.0 < p_preferential < 1.0:
        raise ParameterError("p_preferential must lie in (0, 1)")
    del seed  # structure is fixed; kept for interface symmetry
    return GenerativeModel(
        events=("a", "b", "c"),
        parents={"a": (), "b": (), "c": ("a", "b")},
        cond={"a": branch_prob * p_preferential, "b": branch_prob * (1 - p_preferential), "c": target_prob},
        alpha={"a": branch_prob * p_preferential, "b": branch_prob * (1 - p_preferential), "c": branch_prob * target_prob},
        topology_class="connected_dag",
        pattern_semantics="xor_lethality",
        branch_weights={"a": p_preferential, "b": 1.0 - p_preferential, "_active": branch_prob},
    )


# ---------------------------------------------------------------------------
# Sampling


def _sample_clean(model: GenerativeModel, m: int, rng: np.random.Generator) -> np.ndarray:
    cols = {e: i for i, e in enumerate(model.events)}
    data = np.zeros((m, model.n), dtype=np.uint8)

    if model.pattern_semantics == "xor_lethality":
        active = rng.random(m) < model.branch_weights["_active"]
        takes_first = rng.random(m) < model.branch_weights["a"]
        data[:, cols["a"]] = (active & takes_first).astype(np.uint8)
        data[:, cols["b"]] = (active & ~takes_first).astype(np.uint8)
        fires = rng.random(m) < model.cond["c"]
        data[:, cols["c"]] = (active & fires).astype(np.uint8)
        return data

    disjunctive = model.pattern_semantics == "disjunctive"
    for event in model.topological_order():
        ps = model.parents[event]
        if not ps:
            gate = np.ones(m, dtype=bool)
        else:
            stack = data[:, [cols[p] for p in ps]] == 1
            gate = stack.any(axis=1) if disjunctive else stack.all(axis=1)
        fires = rng.random(m) < model.cond[event]
        data[:, cols[event]] = (gate & fires).astype(np.uint8)
    return data


def apply_noise(data: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """With probability nu an entry is replaced by a fair random bit."""
    if noise.nu == 0.0:
        return data
    randomized = rng.random(data.shape) < noise.nu
    coins = rng.integers(0, 2, size=data.shape, dtype=np.uint8)
    return np.where(randomized, coins, data).astype(np.uint8)


def sample_dataset(
    model: GenerativeModel,
    m: int,
    noise: NoiseSpec | float = 0.0,
    seed: int = 0,
) -> AlterationMatrix:
    """Draw m samples from the model, then inject uniform noise."""
    if m < 1:
        raise ParameterError("m must be >= 1")
    if not isinstance(noise, NoiseSpec):
        noise = NoiseSpec(float(noise))
    rng = substream(seed, "sample", m, noise.nu)
    clean = _sample_clean(model, m, rng)
    noisy = apply_noise(clean, noise, rng)
    return matrix_from_array(noisy, model.events)


def genotype_probability(model: GenerativeModel, genotype: set[str]) -> float:
    """Closed-form probability of observing exactly `genotype` in a clean
    sample: the product over present nodes of their firing rate and over
    enabled-but-absent nodes of one minus it; zero if any present node lacks
    its gate."""
    if model.pattern_semantics == "xor_lethality":
        active = model.branch_weights["_active"]
        pa = model.branch_weights["a"]
        pc = model.cond["c"]
        branch = ("a" in genotype, "b" in genotype)
        if branch == (True, True):
            return 0.0
        if branch == (False, False):
            return 0.0 if "c" in genotype else 1.0 - active
        w = active * (pa if branch[0] else 1.0 - pa)
        return w * (pc if "c" in genotype else 1.0 - pc)

    disjunctive = model.pattern_semantics == "disjunctive"
    prob = 1.0
    for event in model.events:
        ps = model.parents[event]
        if not ps:
            enabled = True
        elif disjunctive:
            enabled = any(p in genotype for p in ps)
        else:
            enabled = all(p in genotype for p in ps)
        if event in genotype:
            if not enabled:
                return 0.0
            prob *= model.cond[event]
        elif enabled:
            prob *= 1.0 - model.cond[event]
    return prob
