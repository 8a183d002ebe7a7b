"""Result serialization: the v1 model JSON document and GraphViz DOT export.

DOT follows the reporting conventions used throughout: node size scales with
marginal probability, edge thickness with non-parametric bootstrap support,
exclusivity patterns are drawn as red boxes, and isolated events are hidden.
"""

from __future__ import annotations

import json

from .errors import SchemaError
from .formulas import XorClause
from .inference import InferenceResult


def result_to_json(result: InferenceResult, confidence: dict | None = None) -> dict:
    dag = result.dag
    nodes = []
    for key in sorted(dag.nodes):
        node = dag.nodes[key]
        entry = {
            "key": key,
            "kind": node.kind,
            "alpha": round(node.alpha, 12),
            "marginal": round(node.marginal, 12),
        }
        if node.clause is not None:
            entry["atoms"] = sorted({l.name for l in node.clause.literals if not l.negated})
            entry["exclusivity"] = isinstance(node.clause, XorClause)
        nodes.append(entry)

    edges = []
    for parent, child in dag.edges():
        sp = result.edge_stats.get((parent, child))
        entry = {
            "parent": parent,
            "child": child,
            "gamma": round(sp.gamma, 12) if sp else None,
            "lambda": round(sp.lam, 12) if sp else None,
            "p_tp": round(sp.p_tp, 12) if sp and sp.p_tp is not None else None,
            "p_pr": round(sp.p_pr, 12) if sp and sp.p_pr is not None else None,
        }
        if confidence and (parent, child) in confidence:
            conf = confidence[(parent, child)]
            entry[f"{conf.mode}_support"] = round(conf.support, 6)
            entry["hypergeometric_p"] = round(conf.hypergeometric_p, 12)
        edges.append(entry)

    return {
        "schema_version": 1,
        "kind": "progression_model",
        "events": list(result.catalog),
        "dropped": list(result.dropped),
        "hypotheses": [f"{h.key()[0]} -> {h.target}" for h in result.hypotheses],
        "nodes": nodes,
        "edges": edges,
        "bootstrap": {
            "attempts": result.bootstrap_attempts,
            "rejected": result.bootstrap_rejected,
        },
        "warnings": list(result.warnings),
        "seed": result.seed,
    }


def dump_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_inferred_edges(path) -> tuple[tuple[str, ...], set[tuple[str, str]]]:
    """Read a v1 model JSON back as (catalog, atomic edge set)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "progression_model" or doc.get("schema_version") != 1:
        raise SchemaError(f"{path} is not a v1 progression model file")
    atoms = {n["key"]: n.get("atoms", [n["key"]]) for n in doc["nodes"]}
    edges: set[tuple[str, str]] = set()
    for e in doc["edges"]:
        for atom in atoms.get(e["parent"], [e["parent"]]):
            edges.add((atom, e["child"]))
    return tuple(doc["events"]), edges


def scores_tsv(result: InferenceResult) -> str:
    lines = ["unit_i\tunit_j\tgamma\tlambda\tp_tp\tp_pr\taccepted"]
    alpha = result.config.alpha
    for (ki, kj) in sorted(result.pair_scores):
        sp = result.pair_scores[(ki, kj)]
        accepted = sp.gamma > 0 and sp.lam > 0 and sp.significant(alpha)
        lines.append(
            f"{ki}\t{kj}\t{sp.gamma:.6f}\t{sp.lam:.6f}\t{sp.p_tp:.6g}\t{sp.p_pr:.6g}\t{int(accepted)}"
        )
    return "\n".join(lines) + "\n"


def _dot_quote(name: str) -> str:
    return '"' + name.replace('"', r"\"") + '"'


def to_dot(result: InferenceResult, confidence: dict | None = None) -> str:
    dag = result.dag
    used: set[str] = set()
    for parent, child in dag.edges():
        used.add(parent)
        used.add(child)

    lines = [
        "digraph progression {",
        "  rankdir=TB;",
        '  node [fontname="Helvetica"];',
    ]
    for key in sorted(dag.nodes):
        node = dag.nodes[key]
        if node.kind == "event" and key not in used:
            continue  # isolated events are not shown
        size = 0.45 + 1.25 * node.marginal
        label = key + "\\n" + f"{node.marginal:.2f}"
        attrs = [
            f"label={_dot_quote(label)}",
            f"width={size:.3f}",
            f"height={0.35 + 0.75 * node.marginal:.3f}",
            "fixedsize=true",
        ]
        if node.kind == "clause":
            attrs.append("shape=box")
            color = "red" if isinstance(node.clause, XorClause) else "darkorange"
            attrs.append(f"color={color}")
        else:
            attrs.append("shape=ellipse")
        lines.append(f"  {_dot_quote(key)} [{', '.join(attrs)}];")
    for parent, child in dag.edges():
        attrs = []
        if confidence and (parent, child) in confidence:
            conf = confidence[(parent, child)]
            attrs.append(f"penwidth={0.5 + 4.0 * conf.support:.3f}")
            attrs.append(
                f"label={_dot_quote(f'{conf.support:.2f} (p={conf.hypergeometric_p:.3g})')}"
            )
        else:
            attrs.append("penwidth=1.0")
        lines.append(f"  {_dot_quote(parent)} -> {_dot_quote(child)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
