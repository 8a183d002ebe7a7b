"""Exception hierarchy. Every error raised by this package derives from ProgressaError."""

from __future__ import annotations


class ProgressaError(Exception):
    """Base class; carries a machine-readable code for the CLI error JSON."""

    code = "error"

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self)}


class MatrixParseError(ProgressaError):
    code = "matrix-parse"

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column

    def payload(self) -> dict:
        out = super().payload()
        out.update({"row": self.row, "column": self.column})
        return out


class CatalogError(ProgressaError):
    code = "catalog"


class DimensionError(ProgressaError):
    code = "dimension"


class FormulaSyntaxError(ProgressaError):
    code = "formula-syntax"

    def __init__(self, message: str, line: int = 1, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class WellFormednessError(ProgressaError):
    code = "hypothesis-ill-formed"


class BindingError(ProgressaError):
    code = "unbound-atom"


class DuplicateHypothesisError(ProgressaError):
    code = "duplicate-hypothesis"


class DegenerateUnitError(ProgressaError):
    code = "degenerate-unit"


class BootstrapStarvationError(ProgressaError):
    code = "bootstrap-starvation"

    def __init__(self, message: str, units: tuple[str, ...] = ()):
        super().__init__(message)
        self.units = tuple(units)

    def payload(self) -> dict:
        out = super().payload()
        out["units"] = list(self.units)
        return out


class ParameterError(ProgressaError):
    code = "parameter"


class ParentCapError(ProgressaError):
    code = "parent-cap"


class SchemaError(ProgressaError):
    code = "schema"


class CatalogMismatchError(ProgressaError):
    code = "catalog-mismatch"
