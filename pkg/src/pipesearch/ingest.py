"""Dataset ingestion: CSV loading, column type inference and the
symbolic facts that seed pipeline planning."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path, PurePath

from .enums import FeatureType
from .errors import ConfigError, InvariantViolation, ParseError

__all__ = [
    "ColumnSchema", "DatasetSchema", "Dataset", "Fact",
    "load_csv", "infer_type", "to_initial_facts", "facts_to_schema",
    "normalize_column_name",
]

# Cell values treated as missing (case-insensitive, after stripping).
MISSING_TOKENS = frozenset({"", "?", "na", "n/a", "null", "nan"})

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def normalize_column_name(raw: str) -> str:
    """Map a raw header to the canonical fact name, e.g. "Capital Gain" -> "field_capital_gain"."""
    base = _NON_ALNUM.sub("_", raw.strip().lower()).strip("_")
    if not base:
        raise ParseError(f"column name {raw!r} normalizes to nothing")
    if base.startswith("field_"):
        return base
    return f"field_{base}"


def normalize_dataset_name(raw: str) -> str:
    stem = PurePath(raw.strip()).stem or raw.strip()
    base = _NON_ALNUM.sub("_", stem.lower()).strip("_")
    if not base:
        raise ParseError(f"dataset name {raw!r} normalizes to nothing")
    return base if base.endswith("_data") else f"{base}_data"


def is_missing(cell: str) -> bool:
    return cell.strip().lower() in MISSING_TOKENS


@dataclass(frozen=True)
class ColumnSchema:
    name: str                # normalized fact name (field_*)
    raw_name: str            # header as it appeared in the source
    ftype: FeatureType


@dataclass
class DatasetSchema:
    """Typed column layout of a dataset plus its designated target."""

    dataset_name: str
    columns: list[ColumnSchema]
    target_name: str | None   # normalized; None only for role="test"
    role: str = "train"

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise InvariantViolation("columns", f"column names not unique after normalization: {dupes}")
        if self.role == "train":
            if self.target_name is None:
                raise InvariantViolation("targetName", "train dataset requires exactly one target")
            if self.target_name not in names:
                raise InvariantViolation("targetName", f"{self.target_name!r} is not a column")
        if self.role not in ("train", "test"):
            raise InvariantViolation("role", f"must be train or test, got {self.role!r}")

    @property
    def feature_columns(self) -> list[ColumnSchema]:
        return [c for c in self.columns if c.name != self.target_name]

    @property
    def target_column(self) -> ColumnSchema | None:
        for c in self.columns:
            if c.name == self.target_name:
                return c
        return None

    def resolve(self, name: str) -> ColumnSchema | None:
        """Find a column by normalized or raw name."""
        for c in self.columns:
            if c.name == name or c.raw_name == name:
                return c
        try:
            normalized = normalize_column_name(name)
        except ParseError:
            return None
        for c in self.columns:
            if c.name == normalized:
                return c
        return None

    def to_json_dict(self) -> dict:
        return {
            "datasetName": self.dataset_name,
            "columns": [{"name": c.name, "rawName": c.raw_name, "type": c.ftype.value}
                        for c in self.columns],
            "targetName": self.target_name,
            "role": self.role,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "DatasetSchema":
        cols = tuple(ColumnSchema(c["name"], c.get("rawName", c["name"]), FeatureType(c["type"]))
                     for c in d["columns"])
        return cls(d["datasetName"], cols, d.get("targetName"), d.get("role", "train"))


@dataclass
class Dataset:
    """Column-major value storage. Numeric columns hold int/float with None
    for missing cells; categorical/text columns hold str with None."""

    schema: DatasetSchema
    columns: dict[str, list]
    row_count: int = field(default=0)

    def __post_init__(self):
        if not self.row_count and self.columns:
            self.row_count = len(next(iter(self.columns.values())))
        for c in self.schema.columns:
            if c.name not in self.columns:
                raise InvariantViolation("columns", f"missing storage for column {c.name}")
            if len(self.columns[c.name]) != self.row_count:
                raise InvariantViolation(
                    "columns", f"column {c.name} has {len(self.columns[c.name])} entries, expected {self.row_count}")

    def column(self, name: str) -> list:
        return self.columns[name]

    @property
    def target_values(self) -> list:
        if self.schema.target_name is None:
            raise ConfigError("dataset has no target column")
        return self.columns[self.schema.target_name]


def infer_type(column_values: list[str]) -> FeatureType:
    """Deterministic column type inference over literal cell values.

    integer if every non-missing value parses as an integer; else float if
    every one parses as a real; else categorical when the distinct values
    are few (ratio <= 0.05, or count <= 20 while not all-distinct);
    otherwise text. Raises on an all-missing column.
    """
    if not column_values:
        raise ParseError("cannot infer type of an empty column")
    present = [v.strip() for v in column_values if not is_missing(v)]
    if not present:
        raise ParseError("untyped column: all values missing")

    def all_parse(parse) -> bool:
        for v in present:
            try:
                parse(v)
            except ValueError:
                return False
        return True

    if all_parse(int):
        return FeatureType.integer
    if all_parse(float):
        return FeatureType.float
    distinct = len(set(present))
    ratio = distinct / len(present)
    if ratio <= 0.05 or (distinct <= 20 and distinct < len(present)):
        return FeatureType.categorical
    return FeatureType.text


def _parse_cell(cell: str, ftype: FeatureType):
    if is_missing(cell):
        return None
    cell = cell.strip()
    if ftype is FeatureType.integer:
        return int(cell)
    if ftype is FeatureType.float:
        return float(cell)
    return cell


def load_csv(
    path: str | Path,
    *,
    has_header: bool = True,
    delimiter: str = ",",
    target_name: str | None = None,
    type_overrides: dict[str, FeatureType] | None = None,
    dataset_name: str | None = None,
    role: str = "train",
) -> Dataset:
    """Load a delimited text file into a typed Dataset.

    Column types are inferred from the cell values unless overridden;
    overrides always win. Missing cells are kept as None, never dropped.
    Raises ParseError (with the offending line number for ragged rows) or
    ConfigError when the target column cannot be found.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"dataInput unresolved: no such file {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if len(rows) < 2:
        raise ParseError(">=2 rows required")

    if has_header:
        header, data_rows = rows[0], rows[1:]
    else:
        header = [f"col{i}" for i in range(len(rows[0]))]
        data_rows = rows
    width = len(header)
    for i, row in enumerate(data_rows):
        if len(row) != width:
            lineno = i + (2 if has_header else 1)
            raise ParseError(f"ragged row: expected {width} cells, got {len(row)}", line=lineno)

    normalized = [normalize_column_name(h) for h in header]
    overrides = {}
    for key, ftype in (type_overrides or {}).items():
        overrides[normalize_column_name(key)] = FeatureType(ftype)

    raw_columns = {normalized[j]: [row[j] for row in data_rows] for j in range(width)}
    col_schemas = []
    for j, name in enumerate(normalized):
        ftype = overrides.get(name) or infer_type(raw_columns[name])
        col_schemas.append(ColumnSchema(name=name, raw_name=header[j], ftype=ftype))

    target_norm = None
    if role == "train":
        if target_name is None:
            raise ConfigError("targetName is required for a train dataset")
        target_norm = normalize_column_name(target_name)
        if target_norm not in normalized:
            raise ConfigError(f"target column {target_name!r} absent from {sorted(normalized)}")

    schema = DatasetSchema(
        dataset_name=dataset_name or normalize_dataset_name(path.stem),
        columns=col_schemas,
        target_name=target_norm,
        role=role,
    )
    parsed = {
        c.name: [_parse_cell(cell, c.ftype) for cell in raw_columns[c.name]]
        for c in col_schemas
    }
    return Dataset(schema=schema, columns=parsed, row_count=len(data_rows))


@dataclass(frozen=True)
class Fact:
    """A ground symbolic fact, e.g. Fact("has_type", ("field_age", "integer"))."""

    name: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})"


def to_initial_facts(schema: DatasetSchema) -> list[Fact]:
    """Initial-state facts for the planner: dataset role, one
    has_field/has_type pair per column, and the target designation.

    For a train dataset with one target the fact count is
    2 + 2 * len(columns)."""
    facts = [Fact("datatype", (schema.dataset_name, schema.role))]
    for col in schema.columns:
        facts.append(Fact("has_field", ("data", col.name)))
        facts.append(Fact("has_type", (col.name, col.ftype.value)))
    if schema.target_name is not None:
        facts.append(Fact("has_targetfield", (schema.dataset_name, schema.target_name)))
    return facts


def facts_to_schema(facts: list[Fact]) -> DatasetSchema:
    """Inverse of to_initial_facts; raw names equal normalized names."""
    dataset_name = role = target = None
    order: list[str] = []
    types: dict[str, FeatureType] = {}
    for f in facts:
        if f.name == "datatype":
            dataset_name, role = f.args
        elif f.name == "has_field":
            order.append(f.args[1])
        elif f.name == "has_type":
            types[f.args[0]] = FeatureType(f.args[1])
        elif f.name == "has_targetfield":
            target = f.args[1]
    if dataset_name is None:
        raise ParseError("fact set lacks a datatype fact")
    columns = [ColumnSchema(name=n, raw_name=n, ftype=types[n]) for n in order]
    return DatasetSchema(dataset_name=dataset_name, columns=columns, target_name=target, role=role)
