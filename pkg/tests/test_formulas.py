import itertools

import numpy as np
import pytest

from progressa.errors import (
    BindingError,
    DuplicateHypothesisError,
    FormulaSyntaxError,
    WellFormednessError,
)
from progressa.formulas import (
    And,
    Atom,
    CnfHypothesis,
    Not,
    Or,
    Xor,
    atoms_of,
    canonicalize,
    evaluate,
    expand_hypotheses,
    format_formula,
    lift,
    parse_formula,
    parse_hypothesis,
    to_cnf,
)
from progressa.matrix import matrix_from_array

WORKED = matrix_from_array([[1, 1, 1], [1, 0, 1], [0, 1, 0], [1, 0, 1]], ("a", "b", "c"))


# ---------------------------------------------------------------------------
# parsing


def test_parse_acml_exclusivity_pattern():
    h = parse_hypothesis("(ASXL1_ns ^ ASXL1_id) ^ SF3B1_ms -> CBL_ms")
    assert h.target == "CBL_ms"
    assert isinstance(h.formula, Xor)
    # chained exclusivity means one three-way group, not nested parity
    assert len(h.formula.children) == 3
    assert atoms_of(h.formula) == {"ASXL1_ns", "ASXL1_id", "SF3B1_ms"}


def test_parse_idempotent_conjunction():
    f = parse_formula("a & a")
    assert canonicalize(f) == Atom("a")


def test_target_in_formula_rejected():
    with pytest.raises(WellFormednessError):
        parse_hypothesis("a | b -> a")


def test_formula_target_rejected():
    with pytest.raises(WellFormednessError):
        parse_hypothesis("a -> b | c")


def test_precedence():
    # ! > & > ^ > |
    f = parse_formula("a & b ^ c | d")
    assert isinstance(f, Or)
    inner = f.children[0]
    assert isinstance(inner, Xor)
    assert isinstance(inner.children[0], And)
    assert f.children[1] == Atom("d")


def test_unicode_aliases():
    assert parse_formula("a ∧ b") == parse_formula("a & b")
    assert parse_formula("a ⊕ b") == parse_formula("a ^ b")
    assert parse_formula("¬ a ∨ b") == parse_formula("!a | b")


def test_syntax_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as err:
        parse_formula("a & (b |")
    assert "col" in str(err.value)


def test_quoted_names():
    f = parse_formula('"weird name" & x')
    assert atoms_of(f) == {"weird name", "x"}


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_exclusivity_rows():
    f = parse_formula("a ^ b")
    assert evaluate(f, {"a": 1, "b": 1}) == 0
    assert evaluate(f, {"a": 1, "b": 0}) == 1
    assert evaluate(f, {"a": 0, "b": 1}) == 1
    assert evaluate(f, {"a": 0, "b": 0}) == 0


def test_evaluate_contradiction():
    f = parse_formula("a & !a")
    for bit in (0, 1):
        assert evaluate(f, {"a": bit}) == 0


def test_evaluate_unbound_atom():
    with pytest.raises(BindingError) as err:
        evaluate(parse_formula("a & b"), {"a": 1})
    assert "b" in str(err.value)


def test_three_way_exclusivity_is_exactly_one():
    f = parse_formula("a ^ b ^ c")
    for bits in itertools.product((0, 1), repeat=3):
        row = dict(zip("abc", bits))
        assert evaluate(f, row) == int(sum(bits) == 1)


# ---------------------------------------------------------------------------
# canonical CNF


def _random_formula(rng, atoms, depth):
    if depth == 0 or rng.random() < 0.3:
        name = atoms[rng.integers(0, len(atoms))]
        return Atom(name) if rng.random() < 0.7 else Not(Atom(name))
    kind = rng.integers(0, 4)
    width = int(rng.integers(2, 4))
    kids = tuple(_random_formula(rng, atoms, depth - 1) for _ in range(width))
    if kind == 0:
        return And(kids)
    if kind == 1:
        return Or(kids)
    if kind == 2:
        return Xor(kids)
    return Not(_random_formula(rng, atoms, depth - 1))


def test_cnf_preserves_semantics_exhaustively():
    rng = np.random.default_rng(23)
    atoms = tuple("abcdef")
    for _ in range(120):
        f = _random_formula(rng, atoms, int(rng.integers(1, 5)))
        names = sorted(atoms_of(f))
        g = canonicalize(f)
        for bits in itertools.product((0, 1), repeat=len(names)):
            row = dict(zip(names, bits))
            assert evaluate(g, row) == evaluate(f, row)


def test_parse_print_round_trip_on_canonical_forms():
    rng = np.random.default_rng(29)
    atoms = tuple("abcde")
    for _ in range(80):
        f = _random_formula(rng, atoms, int(rng.integers(1, 4)))
        cnf = to_cnf(f)
        if not cnf:
            continue  # tautologies have no concrete syntax
        printed = format_formula(f)
        assert format_formula(parse_formula(printed)) == printed


# ---------------------------------------------------------------------------
# lifting


def test_lift_worked_matrix():
    h = parse_hypothesis("a ^ b -> c")
    lm = lift(WORKED, [h])
    assert lm.keys == ("a", "b", "c", "(a ^ b)")
    assert lm.data[:, 3].tolist() == [0, 1, 1, 1]
    assert lm.gate_key == ("(a ^ b)",)
    assert lm.clause_keys == (("(a ^ b)",),)
    assert lm.units[0].origins == ((0, "clause"), (0, "formula"))


def test_lift_empty_hypotheses_is_identity():
    lm = lift(WORKED, [])
    assert lm.units == ()
    assert lm.data is WORKED.data


def test_lift_matches_truth_table_oracle():
    rng = np.random.default_rng(31)
    data = rng.integers(0, 2, size=(6, 4)).astype(np.uint8)
    matrix = matrix_from_array(data, ("a", "b", "c", "d"))
    h = parse_hypothesis("(a | b) & c -> d")
    lm = lift(matrix, [h])
    # whole-formula column plus the non-atomic clause column; c reuses its own
    assert set(lm.clause_keys[0]) == {"(a | b)", "c"}
    for r in range(6):
        row = {e: int(data[r, i]) for i, e in enumerate(matrix.events)}
        want_formula = int((row["a"] or row["b"]) and row["c"])
        want_clause = int(row["a"] or row["b"])
        assert lm.data[r, lm.col(lm.gate_key[0])] == want_formula
        assert lm.data[r, lm.col("(a | b)")] == want_clause


def test_lift_is_pointwise_under_row_permutation():
    rng = np.random.default_rng(37)
    data = rng.integers(0, 2, size=(8, 3)).astype(np.uint8)
    matrix = matrix_from_array(data, ("a", "b", "c"))
    h = parse_hypothesis("a ^ b -> c")
    base = lift(matrix, [h]).data
    perm = rng.permutation(8)
    shuffled = lift(matrix_from_array(data[perm], ("a", "b", "c")), [h]).data
    assert np.array_equal(base[perm], shuffled)


def test_duplicate_hypothesis_rejected():
    h1 = parse_hypothesis("a ^ b -> c")
    h2 = parse_hypothesis("b ^ a -> c")  # same canonical form
    with pytest.raises(DuplicateHypothesisError):
        lift(WORKED, [h1, h2])


def test_lift_unknown_atom():
    with pytest.raises(BindingError) as err:
        lift(WORKED, [parse_hypothesis("a ^ zz -> c")])
    assert "zz" in str(err.value)


def test_expand_hypotheses():
    h = parse_hypothesis("a ^ b -> c")
    out = expand_hypotheses([h], ("a", "b", "c", "d"))
    targets = {x.target for x in out}
    assert targets == {"c", "d"}


def test_negated_literals_allowed_in_clauses():
    f = parse_formula("!a | b")
    cnf = to_cnf(f)
    assert len(cnf) == 1
    assert evaluate(canonicalize(f), {"a": 1, "b": 0}) == 0
    assert evaluate(canonicalize(f), {"a": 0, "b": 0}) == 1


def test_hypothesis_with_negation_of_group():
    # negated exclusivity groups are expanded, not kept primitive
    f = parse_formula("!(a ^ b)")
    for bits in itertools.product((0, 1), repeat=2):
        row = dict(zip("ab", bits))
        assert evaluate(canonicalize(f), row) == int(sum(bits) != 1)
