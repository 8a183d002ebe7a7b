"""Propositional patterns over events: parsing, CNF canonicalization, evaluation
and the lifting of a dataset with formula/clause columns.

Concrete syntax: atoms are identifiers (quote names with spaces or dashes),
operators `!` (not), `&` (and), `^` (exclusivity), `|` (or), with precedence
! > & > ^ > |, parentheses, and `FORMULA -> EVENT` for a hypothesis. Unicode
aliases are accepted for the four connectives.

`^` chains denote hard exclusivity: exactly one operand true, not parity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    BindingError,
    DuplicateHypothesisError,
    FormulaSyntaxError,
    WellFormednessError,
)
from .matrix import AlterationMatrix

# ---------------------------------------------------------------------------
# AST


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]


@dataclass(frozen=True)
class Xor(Formula):
    """Hard exclusivity: true iff exactly one child is true."""

    children: tuple[Formula, ...]


def atoms_of(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.name}
    if isinstance(f, Not):
        return atoms_of(f.child)
    out: set[str] = set()
    for c in f.children:
        out |= atoms_of(c)
    return out


# ---------------------------------------------------------------------------
# Tokenizer / parser

_ALIASES = {"∧": "&", "∨": "|", "⊕": "^", "¬": "!"}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_:.]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # 'ident' | 'op' | 'end'
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 0
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        ch = _ALIASES.get(ch, ch)
        if ch in "&|^!()":
            tokens.append(_Token("op", ch, line, col))
            i += 1
            col += 1
            continue
        if text.startswith("->", i):
            tokens.append(_Token("op", "->", line, col))
            i += 2
            col += 2
            continue
        if ch == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise FormulaSyntaxError("unterminated quoted name", line, col)
            tokens.append(_Token("ident", text[i + 1 : end], line, col))
            col += end + 1 - i
            i = end + 1
            continue
        match = _IDENT.match(text, i)
        if match:
            tokens.append(_Token("ident", match.group(), line, col))
            col += match.end() - i
            i = match.end()
            continue
        raise FormulaSyntaxError(f"unexpected character {text[i]!r}", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_end(self):
        tok = self.peek()
        if tok.kind != "end":
            raise FormulaSyntaxError(f"unexpected {tok.value!r}", tok.line, tok.col)

    # precedence, loosest first: | then ^ then & then !
    def formula(self) -> Formula:
        parts = [self.xor()]
        while self.peek().value == "|":
            self.next()
            parts.append(self.xor())
        if len(parts) == 1:
            return parts[0]
        return Or(_flatten(Or, parts))

    def xor(self) -> Formula:
        parts = [self.conj()]
        while self.peek().value == "^":
            self.next()
            parts.append(self.conj())
        if len(parts) == 1:
            return parts[0]
        # chained/nested ^ means one exclusivity group over all operands
        return Xor(_flatten(Xor, parts))

    def conj(self) -> Formula:
        parts = [self.unary()]
        while self.peek().value == "&":
            self.next()
            parts.append(self.unary())
        if len(parts) == 1:
            return parts[0]
        return And(_flatten(And, parts))

    def unary(self) -> Formula:
        tok = self.peek()
        if tok.value == "!":
            self.next()
            return Not(self.unary())
        if tok.value == "(":
            self.next()
            inner = self.formula()
            closing = self.next()
            if closing.value != ")":
                raise FormulaSyntaxError("expected ')'", closing.line, closing.col)
            return inner
        if tok.kind == "ident":
            self.next()
            return Atom(tok.value)
        raise FormulaSyntaxError(f"expected an event name, got {tok.value!r}", tok.line, tok.col)


def _flatten(kind, parts: Iterable[Formula]) -> tuple[Formula, ...]:
    out: list[Formula] = []
    for p in parts:
        if isinstance(p, kind):
            out.extend(p.children)
        else:
            out.append(p)
    return tuple(out)


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    f = parser.formula()
    tok = parser.peek()
    if tok.value == "->":
        raise FormulaSyntaxError("'->' is only valid in a hypothesis; use parse_hypothesis", tok.line, tok.col)
    parser.expect_end()
    return f


@dataclass(frozen=True)
class CnfHypothesis:
    """A pattern `formula -> target`; the target must not occur in the formula."""

    formula: Formula
    target: str

    def __post_init__(self):
        if self.target in atoms_of(self.formula):
            raise WellFormednessError(
                f"target '{self.target}' occurs in its own pattern"
            )

    @property
    def cnf(self) -> "Cnf":
        return to_cnf(self.formula)

    def key(self) -> tuple[str, str]:
        return (format_cnf(self.cnf), self.target)


def parse_hypothesis(text: str) -> CnfHypothesis:
    parser = _Parser(text)
    f = parser.formula()
    tok = parser.next()
    if tok.value != "->":
        raise FormulaSyntaxError("expected '->' between pattern and target", tok.line, tok.col)
    target = parser.next()
    if target.kind != "ident":
        raise WellFormednessError("hypothesis target must be a single event, not a formula")
    trailing = parser.peek()
    if trailing.kind != "end":
        raise WellFormednessError("hypothesis target must be a single event, not a formula")
    return CnfHypothesis(f, target.value)


def parse_hypothesis_file(path, expand_events: tuple[str, ...] | None = None) -> list[CnfHypothesis]:
    """One hypothesis per line; `#` comments. With `expand_events`, a bare
    pattern line (no `->`) is expanded against every listed event that does
    not occur in the pattern."""
    out: list[CnfHypothesis] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "->" in line:
                out.append(parse_hypothesis(line))
            elif expand_events is not None:
                formula = parse_formula(line)
                members = atoms_of(formula)
                for ev in expand_events:
                    if ev not in members:
                        out.append(CnfHypothesis(formula, ev))
            else:
                raise WellFormednessError(
                    f"hypothesis '{line}' has no target; use FORMULA -> EVENT "
                    "or pass --expand-hypotheses"
                )
    return out


def expand_hypotheses(hypotheses: Iterable[CnfHypothesis], events: tuple[str, ...]) -> list[CnfHypothesis]:
    """Re-target every pattern to each event not occurring in the pattern."""
    out: list[CnfHypothesis] = []
    seen: set[tuple[str, str]] = set()
    for h in hypotheses:
        members = atoms_of(h.formula)
        for ev in events:
            if ev in members:
                continue
            cand = CnfHypothesis(h.formula, ev)
            if cand.key() not in seen:
                seen.add(cand.key())
                out.append(cand)
    return out


# ---------------------------------------------------------------------------
# Canonical CNF


@dataclass(frozen=True, order=True)
class Literal:
    name: str
    negated: bool = False

    def negate(self) -> "Literal":
        return Literal(self.name, not self.negated)

    def __str__(self) -> str:
        return ("!" if self.negated else "") + self.name


@dataclass(frozen=True)
class OrClause:
    literals: tuple[Literal, ...]

    def __str__(self) -> str:
        if len(self.literals) == 1:
            return str(self.literals[0])
        return "(" + " | ".join(map(str, self.literals)) + ")"


@dataclass(frozen=True)
class XorClause:
    """Exclusivity group: satisfied iff exactly one literal holds."""

    literals: tuple[Literal, ...]

    def __str__(self) -> str:
        return "(" + " ^ ".join(map(str, self.literals)) + ")"


Clause = OrClause | XorClause
Cnf = tuple[Clause, ...]


def _negate(f: Formula) -> Formula:
    return f.child if isinstance(f, Not) else Not(f)


def _nnf(f: Formula, neg: bool) -> Formula:
    """Push negations onto atoms; negated exclusivity groups are expanded."""
    if isinstance(f, Atom):
        return Not(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.child, not neg)
    if isinstance(f, And):
        kids = tuple(_nnf(c, neg) for c in f.children)
        return Or(_flatten(Or, kids)) if neg else And(_flatten(And, kids))
    if isinstance(f, Or):
        kids = tuple(_nnf(c, neg) for c in f.children)
        return And(_flatten(And, kids)) if neg else Or(_flatten(Or, kids))
    if isinstance(f, Xor):
        if not neg:
            return Xor(tuple(_nnf(c, False) for c in f.children))
        # not-exactly-one(f1..fk) == AND_i (!fi | OR_{j!=i} fj)
        conjuncts = []
        for i, fi in enumerate(f.children):
            rest = [f.children[j] for j in range(len(f.children)) if j != i]
            conjuncts.append(Or(_flatten(Or, (_negate(fi), *rest))))
        return _nnf(And(tuple(conjuncts)), False)
    raise TypeError(f"unknown node {f!r}")


def _is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.child, Atom))


def _as_literal(f: Formula) -> Literal:
    if isinstance(f, Atom):
        return Literal(f.name)
    return Literal(f.child.name, True)


def _xor_as_or_clauses(f: Xor) -> Formula:
    # exactly-one(f1..fk) == (OR_i fi) AND AND_{i<j} (!fi | !fj)
    parts: list[Formula] = [Or(_flatten(Or, f.children))]
    for a, b in combinations(f.children, 2):
        parts.append(Or(_flatten(Or, (_negate(a), _negate(b)))))
    return And(tuple(parts))


def _xor_free(f: Formula) -> Formula:
    """Rewrite every exclusivity group into plain and/or form (NNF in, NNF out)."""
    if _is_literal(f):
        return f
    if isinstance(f, And):
        return And(tuple(_xor_free(c) for c in f.children))
    if isinstance(f, Or):
        return Or(tuple(_xor_free(c) for c in f.children))
    if isinstance(f, Xor):
        return _xor_free(_nnf(_xor_as_or_clauses(f), False))
    raise TypeError(f)


def _plain_clauses(f: Formula) -> list[frozenset[Literal]]:
    """CNF clauses of an NNF formula containing no exclusivity groups."""
    if _is_literal(f):
        return [frozenset([_as_literal(f)])]
    if isinstance(f, And):
        out: list[frozenset[Literal]] = []
        for c in f.children:
            out.extend(_plain_clauses(c))
        return out
    if isinstance(f, Or):
        # (A1 & A2 & ...) | B | ...  ==  AND over the cross product of clause unions
        product: list[frozenset[Literal]] = [frozenset()]
        for c in f.children:
            sub = _plain_clauses(c)
            product = [p | cl for p in product for cl in sub]
        return product
    raise TypeError(f)


def _clauses(f: Formula) -> list[frozenset[Literal] | XorClause]:
    """CNF clause list of an NNF formula. Exclusivity groups over literals are
    kept primitive when they stand as whole conjuncts; anywhere else they are
    rewritten into plain disjunctive clauses."""
    if _is_literal(f):
        return [frozenset([_as_literal(f)])]
    if isinstance(f, And):
        out: list[frozenset[Literal] | XorClause] = []
        for c in f.children:
            out.extend(_clauses(c))
        return out
    if isinstance(f, Xor):
        if all(_is_literal(c) for c in f.children):
            return [XorClause(tuple(_as_literal(c) for c in f.children))]
        return _clauses(_nnf(_xor_as_or_clauses(f), False))
    if isinstance(f, Or):
        return list(_plain_clauses(_xor_free(f)))
    raise TypeError(f"unexpected node in NNF: {f!r}")


def _clauses_to_cnf(clauses) -> Cnf:
    ordered: list[Clause] = []
    seen = set()
    for cl in clauses:
        if isinstance(cl, XorClause):
            canon: Clause = XorClause(tuple(sorted(cl.literals)))
        else:
            lits = sorted(cl)
            if any(l.negate() in cl for l in lits):
                continue  # tautological disjunction
            canon = OrClause(tuple(lits))
        if canon not in seen:
            seen.add(canon)
            ordered.append(canon)
    ordered.sort(key=lambda c: (isinstance(c, XorClause), tuple(sorted((l.name, l.negated) for l in c.literals)), len(c.literals)))
    return tuple(ordered)


def _cnf_to_formula_node(cnf: Cnf, tautology_atom: str = "__true__") -> Formula:
    def clause_node(cl: Clause) -> Formula:
        lits = [Not(Atom(l.name)) if l.negated else Atom(l.name) for l in cl.literals]
        if isinstance(cl, XorClause):
            return Xor(tuple(lits))
        return lits[0] if len(lits) == 1 else Or(tuple(lits))

    if not cnf:
        # tautology; canonical stand-in that evaluates to 1 everywhere
        return Or((Atom(tautology_atom), Not(Atom(tautology_atom))))
    nodes = [clause_node(c) for c in cnf]
    return nodes[0] if len(nodes) == 1 else And(tuple(nodes))


def to_cnf(f: Formula) -> Cnf:
    """Canonical conjunction of clauses; each clause is a disjunction of
    literals or a primitive exclusivity group."""
    return _clauses_to_cnf(_clauses(_nnf(f, False)))


def canonicalize(f: Formula) -> Formula:
    """Semantics-preserving canonical form of a formula."""
    return _cnf_to_formula_node(to_cnf(f), tautology_atom=min(atoms_of(f)))


def format_cnf(cnf: Cnf) -> str:
    if not cnf:
        return "(__true__ | !__true__)"
    return " & ".join(str(c) for c in cnf)


def format_formula(f: Formula) -> str:
    return format_cnf(to_cnf(f))


# ---------------------------------------------------------------------------
# Evaluation


def evaluate(f: Formula, row: Mapping[str, int]) -> int:
    """Standard boolean semantics on one row; Xor is exactly-one."""
    if isinstance(f, Atom):
        try:
            return 1 if row[f.name] else 0
        except KeyError:
            raise BindingError(f"atom '{f.name}' is not bound to any event") from None
    if isinstance(f, Not):
        return 1 - evaluate(f.child, row)
    if isinstance(f, And):
        return int(all(evaluate(c, row) for c in f.children))
    if isinstance(f, Or):
        return int(any(evaluate(c, row) for c in f.children))
    if isinstance(f, Xor):
        return int(sum(evaluate(c, row) for c in f.children) == 1)
    raise TypeError(f)


def evaluate_column(f: Formula, data: np.ndarray, binding: Mapping[str, int]) -> np.ndarray:
    """Vectorized row-by-row evaluation over an (m, n) binary matrix."""
    if isinstance(f, Atom):
        try:
            return data[:, binding[f.name]].astype(np.uint8)
        except KeyError:
            raise BindingError(f"atom '{f.name}' is not bound to any event") from None
    if isinstance(f, Not):
        return (1 - evaluate_column(f.child, data, binding)).astype(np.uint8)
    if isinstance(f, And):
        acc = evaluate_column(f.children[0], data, binding)
        for c in f.children[1:]:
            acc = acc & evaluate_column(c, data, binding)
        return acc
    if isinstance(f, Or):
        acc = evaluate_column(f.children[0], data, binding)
        for c in f.children[1:]:
            acc = acc | evaluate_column(c, data, binding)
        return acc
    if isinstance(f, Xor):
        total = np.zeros(data.shape[0], dtype=np.int32)
        for c in f.children:
            total += evaluate_column(c, data, binding)
        return (total == 1).astype(np.uint8)
    raise TypeError(f)


def clause_column(cl: Clause, data: np.ndarray, binding: Mapping[str, int]) -> np.ndarray:
    return evaluate_column(_cnf_to_formula_node((cl,)), data, binding)


# ---------------------------------------------------------------------------
# Lifting


@dataclass(frozen=True)
class LiftedUnit:
    """One extra column: either a whole input pattern or one of its clauses."""

    key: str  # canonical formula/clause string
    kind: str  # 'formula' | 'clause'
    clause: Clause | None
    origins: tuple[tuple[int, str], ...]  # (hypothesis index, 'formula'|'clause')


@dataclass(frozen=True)
class LiftedMatrix:
    """Input matrix augmented with evaluated pattern and clause columns.

    Column layout: the n event columns first, then one column per unit.
    `gate_key[i]` names the column scored when testing hypothesis i against
    its target; `clause_keys[i]` name the parent nodes it contributes.
    """

    base: AlterationMatrix
    hypotheses: tuple[CnfHypothesis, ...]
    units: tuple[LiftedUnit, ...]
    data: np.ndarray
    gate_key: tuple[str, ...]
    clause_keys: tuple[tuple[str, ...], ...]

    @property
    def m(self) -> int:
        return int(self.data.shape[0])

    @property
    def keys(self) -> tuple[str, ...]:
        return self.base.events + tuple(u.key for u in self.units)

    def col(self, key: str) -> int:
        return self.keys.index(key)

    def is_event(self, key: str) -> bool:
        return key in self.base.events


def lift(matrix: AlterationMatrix, hypotheses: Iterable[CnfHypothesis]) -> LiftedMatrix:
    """Append one evaluated column per input pattern and per disjunctive
    clause of each pattern. Clauses that are bare events reuse the event
    column; a single-clause pattern contributes a single shared column."""
    hyps = tuple(hypotheses)
    binding = {name: j for j, name in enumerate(matrix.events)}

    seen_keys: set[tuple[str, str]] = set()
    for h in hyps:
        for name in atoms_of(h.formula) | {h.target}:
            if name not in binding:
                raise BindingError(f"atom '{name}' is not bound to any event")
        k = h.key()
        if k in seen_keys:
            raise DuplicateHypothesisError(
                f"duplicate hypothesis {k[0]} -> {k[1]}"
            )
        seen_keys.add(k)

    units: dict[str, dict] = {}
    gate_keys: list[str] = []
    clause_key_lists: list[tuple[str, ...]] = []

    def add_unit(key: str, kind: str, clause: Clause | None, origin: tuple[int, str], column: np.ndarray):
        if key in units:
            units[key]["origins"].append(origin)
        else:
            units[key] = {"kind": kind, "clause": clause, "origins": [origin], "column": column}

    for idx, h in enumerate(hyps):
        cnf = h.cnf
        ckeys: list[str] = []
        for cl in cnf:
            if isinstance(cl, OrClause) and len(cl.literals) == 1 and not cl.literals[0].negated:
                ckeys.append(cl.literals[0].name)  # bare event: reuse its column
                continue
            key = str(cl)
            add_unit(key, "clause", cl, (idx, "clause"), clause_column(cl, matrix.data, binding))
            ckeys.append(key)
        clause_key_lists.append(tuple(ckeys))

        if len(cnf) == 1:
            gate_keys.append(ckeys[0])
            if ckeys[0] in units:
                units[ckeys[0]]["origins"].append((idx, "formula"))
        else:
            fkey = format_cnf(cnf)
            add_unit(fkey, "formula", None, (idx, "formula"),
                     evaluate_column(h.formula, matrix.data, binding))
            gate_keys.append(fkey)

    unit_list = tuple(
        LiftedUnit(key=k, kind=u["kind"], clause=u["clause"], origins=tuple(u["origins"]))
        for k, u in units.items()
    )
    if unit_list:
        extra = np.column_stack([units[u.key]["column"] for u in unit_list]).astype(np.uint8)
        data = np.hstack([matrix.data, extra])
    else:
        data = matrix.data
    return LiftedMatrix(
        base=matrix,
        hypotheses=hyps,
        units=unit_list,
        data=data,
        gate_key=tuple(gate_keys),
        clause_keys=tuple(clause_key_lists),
    )
