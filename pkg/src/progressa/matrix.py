"""Binary alteration matrices: loading, validation and empirical probabilities.

A dataset is an m x n binary matrix over a named event catalog, samples as
rows. Columns with observed frequency 0 or 1 and duplicated columns are
flagged at load time; downstream inference drops them unless forced.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import CatalogError, DegenerateUnitError, DimensionError, MatrixParseError


class EventId(NamedTuple):
    index: int
    name: str


@dataclass(frozen=True)
class ValidationReport:
    """Columns violating the non-degeneracy / distinguishability assumptions."""

    degenerate: tuple[str, ...] = ()
    duplicates: tuple[tuple[str, ...], ...] = ()

    @property
    def clean(self) -> bool:
        return not self.degenerate and not self.duplicates

    def messages(self) -> list[str]:
        out = []
        for name in self.degenerate:
            out.append(f"column '{name}' has degenerate observed frequency (all 0 or all 1)")
        for group in self.duplicates:
            out.append("identical columns: " + ", ".join(group))
        return out


@dataclass(frozen=True)
class AlterationMatrix:
    """Immutable m x n binary observation matrix with named columns."""

    events: tuple[str, ...]
    data: np.ndarray  # (m, n) uint8, entries in {0, 1}
    validation: ValidationReport = field(default_factory=ValidationReport)

    def __post_init__(self):
        if self.data.ndim != 2:
            raise DimensionError("data must be a 2-d array")
        if self.data.shape[0] == 0 or self.data.shape[1] == 0:
            raise DimensionError("empty matrix")
        if self.data.shape[1] != len(self.events):
            raise DimensionError(
                f"{len(self.events)} event names for {self.data.shape[1]} columns"
            )
        if len(set(self.events)) != len(self.events):
            raise CatalogError("duplicate event names in catalog")

    @property
    def m(self) -> int:
        return int(self.data.shape[0])

    @property
    def n(self) -> int:
        return int(self.data.shape[1])

    @property
    def event_ids(self) -> tuple[EventId, ...]:
        return tuple(EventId(i, name) for i, name in enumerate(self.events))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.events.index(name)]
        except ValueError:
            raise CatalogError(f"unknown event '{name}'") from None

    def drop_columns(self, names: set[str]) -> "AlterationMatrix":
        keep = [i for i, e in enumerate(self.events) if e not in names]
        if not keep:
            raise DimensionError("dropping all columns leaves an empty matrix")
        sub = validate_columns(self.data[:, keep], tuple(self.events[i] for i in keep))
        return AlterationMatrix(tuple(self.events[i] for i in keep), self.data[:, keep], sub)

    def invalid_columns(self) -> set[str]:
        """Names flagged degenerate plus all-but-first of each duplicate group."""
        bad = set(self.validation.degenerate)
        for group in self.validation.duplicates:
            bad.update(group[1:])
        return bad


def validate_columns(data: np.ndarray, events: tuple[str, ...]) -> ValidationReport:
    m = data.shape[0]
    sums = data.sum(axis=0)
    degenerate = tuple(events[j] for j in range(len(events)) if sums[j] in (0, m))
    groups: dict[bytes, list[str]] = {}
    for j, name in enumerate(events):
        groups.setdefault(data[:, j].tobytes(), []).append(name)
    duplicates = tuple(tuple(g) for g in groups.values() if len(g) > 1)
    return ValidationReport(degenerate=degenerate, duplicates=duplicates)


def _sniff_delimiter(header: str) -> str | None:
    if "\t" in header:
        return "\t"
    if "," in header:
        return ","
    return None  # any-whitespace split


def load_matrix(source, transpose: bool = False) -> AlterationMatrix:
    """Parse a TSV/CSV stream (or path) into an AlterationMatrix.

    First row holds event names, remaining rows hold samples with cells in
    {0, 1}; delimiter is sniffed from the header. `transpose` accepts the
    events-as-rows layout (first column then holds the names).
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_matrix(fh, transpose=transpose)
    if isinstance(source, str):  # pragma: no cover - guarded above
        source = io.StringIO(source)

    lines = [ln.rstrip("\n\r") for ln in source]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DimensionError("empty input")
    delim = _sniff_delimiter(lines[0])
    split = (lambda s: s.split(delim)) if delim else (lambda s: s.split())
    cells = [[c.strip().strip('"') for c in split(ln)] for ln in lines]

    if transpose:
        width = len(cells[0])
        for r, row in enumerate(cells):
            if len(row) != width:
                raise MatrixParseError(f"ragged row {r + 1}: {len(row)} cells, expected {width}", row=r + 1)
        cells = [list(col) for col in zip(*cells)]

    header = cells[0]
    body = cells[1:]
    if not body:
        raise DimensionError("no sample rows")
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise CatalogError("duplicate event name(s): " + ", ".join(dupes))

    n = len(header)
    data = np.zeros((len(body), n), dtype=np.uint8)
    for r, row in enumerate(body):
        if len(row) != n:
            raise MatrixParseError(f"row {r + 2} has {len(row)} cells, expected {n}", row=r + 2)
        for c, cell in enumerate(row):
            if cell == "0":
                continue
            if cell == "1":
                data[r, c] = 1
            else:
                raise MatrixParseError(
                    f"non-binary cell '{cell}' at row {r + 2}, column '{header[c]}'",
                    row=r + 2,
                    column=c,
                )
    events = tuple(header)
    return AlterationMatrix(events, data, validate_columns(data, events))


def save_matrix(matrix: AlterationMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(matrix.events) + "\n")
        for row in matrix.data:
            fh.write("\t".join(str(int(v)) for v in row) + "\n")


def matrix_from_array(data, events: tuple[str, ...] | None = None) -> AlterationMatrix:
    """Wrap an array-like of 0/1 values, generating names when absent."""
    arr = np.asarray(data)
    if not np.isin(arr, (0, 1)).all():
        raise MatrixParseError("matrix entries must be 0 or 1")
    arr = arr.astype(np.uint8)
    if events is None:
        events = tuple(f"e{j}" for j in range(arr.shape[1]))
    return AlterationMatrix(tuple(events), arr, validate_columns(arr, tuple(events)))


@dataclass(frozen=True)
class EmpiricalProbabilities:
    """Relative-frequency marginals P(i) and pairwise joints P(i and j)."""

    marginal: np.ndarray  # (n,)
    joint: np.ndarray  # (n, n), symmetric, diagonal equals marginal

    def conditional(self, j: int, i: int) -> float:
        """P(j | i); defined only when P(i) > 0."""
        pi = self.marginal[i]
        if pi <= 0:
            raise DegenerateUnitError(f"P(j|i) undefined: unit {i} never occurs")
        return float(self.joint[i, j] / pi)

    def conditional_not(self, j: int, i: int) -> float:
        """P(j | not i); defined only when P(i) < 1."""
        pi = self.marginal[i]
        if pi >= 1:
            raise DegenerateUnitError(f"P(j|~i) undefined: unit {i} always occurs")
        return float((self.marginal[j] - self.joint[i, j]) / (1.0 - pi))


def estimate_probabilities(matrix: AlterationMatrix | np.ndarray) -> EmpiricalProbabilities:
    """Maximum-likelihood marginal and joint frequencies, no smoothing."""
    data = matrix.data if isinstance(matrix, AlterationMatrix) else np.asarray(matrix)
    if data.shape[0] < 1:
        raise DimensionError("need at least one sample")
    m = data.shape[0]
    x = data.astype(np.float64)
    marginal = x.mean(axis=0)
    joint = (x.T @ x) / m
    return EmpiricalProbabilities(marginal=marginal, joint=joint)
