"""Record schemas, encoded datasets, CSV round-trips, and toy generators.

Columns are binary, categorical (one-hot), or continuous (min-max scaled
into [0, 1]); at most one column is the prediction target and is kept as
a label vector rather than a feature. Encoded rows are zero-padded to
the next width supported by the conv stacks (a multiple of 16); the pad
region is excluded from losses and metrics via ``schema.mask``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .models import WIDTH_UNIT

COLUMN_KINDS = ("binary", "categorical", "continuous")


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    levels: tuple[str, ...] = ()
    min: float = 0.0
    max: float = 1.0
    target: bool = False

    def __post_init__(self):
        if self.kind not in COLUMN_KINDS:
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "categorical" and len(self.levels) < 2:
            raise DataError(f"column {self.name!r}: categorical needs >= 2 levels")
        if self.kind == "continuous" and not self.min < self.max:
            raise DataError(f"column {self.name!r}: need min < max, got [{self.min}, {self.max}]")

    @property
    def width(self) -> int:
        return len(self.levels) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class RecordSchema:
    columns: tuple[Column, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate column names: {names}")
        targets = [c for c in self.columns if c.target]
        if len(targets) > 1:
            raise DataError("at most one target column is allowed")
        if targets and targets[0].kind == "continuous":
            raise DataError("the target column must be binary or categorical")

    @property
    def target_column(self) -> Column | None:
        for c in self.columns:
            if c.target:
                return c
        return None

    @property
    def feature_columns(self) -> tuple[Column, ...]:
        return tuple(c for c in self.columns if not c.target)

    @property
    def encoded_width(self) -> int:
        return sum(c.width for c in self.feature_columns)

    @property
    def input_width(self) -> int:
        w = self.encoded_width
        return max(WIDTH_UNIT, ((w + WIDTH_UNIT - 1) // WIDTH_UNIT) * WIDTH_UNIT)

    @property
    def padding(self) -> int:
        return self.input_width - self.encoded_width

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.input_width)
        m[:self.encoded_width] = 1.0
        return m

    def all_binary(self) -> bool:
        return all(c.kind == "binary" for c in self.feature_columns)

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            d: dict = {"name": c.name, "kind": c.kind}
            if c.kind == "categorical":
                d["levels"] = list(c.levels)
            if c.kind == "continuous":
                d["min"] = c.min
                d["max"] = c.max
            if c.target:
                d["target"] = True
            cols.append(d)
        return {"columns": cols}

    @staticmethod
    def from_dict(d: dict) -> "RecordSchema":
        if "columns" not in d:
            raise DataError("schema document needs a 'columns' list")
        cols = []
        for raw in d["columns"]:
            cols.append(Column(
                name=raw["name"],
                kind=raw.get("kind", "binary"),
                levels=tuple(raw.get("levels", ())),
                min=float(raw.get("min", 0.0)),
                max=float(raw.get("max", 1.0)),
                target=bool(raw.get("target", False)),
            ))
        return RecordSchema(tuple(cols))


@dataclass
class Dataset:
    """Encoded rows in [0, 1] at schema input width, plus optional labels."""

    schema: RecordSchema
    X: np.ndarray
    labels: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != self.schema.input_width:
            raise DataError(
                f"dataset matrix has shape {self.X.shape}, schema input width "
                f"{self.schema.input_width}")
        if np.any(self.X < 0) or np.any(self.X > 1):
            raise DataError("encoded values must lie in [0, 1]")
        if self.labels is not None and len(self.labels) != len(self.X):
            raise DataError("label vector length does not match the matrix")

    def __len__(self):
        return len(self.X)

    @property
    def features(self) -> np.ndarray:
        """Encoded columns without the conv padding."""
        return self.X[:, :self.schema.encoded_width]


def _parse_cell(col: Column, raw: str, row_idx: int):
    where = f"row {row_idx}, column {col.name!r}"
    if col.kind == "binary":
        if raw not in ("0", "1"):
            raise DataError(f"{where}: expected 0 or 1, got {raw!r}")
        return float(raw)
    if col.kind == "categorical":
        if raw not in col.levels:
            raise DataError(f"{where}: {raw!r} is not one of levels {list(col.levels)}")
        return col.levels.index(raw)
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"{where}: cannot parse {raw!r} as a number") from None
    if not col.min <= value <= col.max:
        raise DataError(f"{where}: value {value} outside [{col.min}, {col.max}]")
    return (value - col.min) / (col.max - col.min)


def load_csv(path, schema: RecordSchema | str | Path) -> Dataset:
    """Read a CSV whose header matches the schema and encode it."""
    if not isinstance(schema, RecordSchema):
        import json
        schema = RecordSchema.from_dict(json.loads(Path(schema).read_text()))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        expected = [c.name for c in schema.columns]
        if header != expected:
            raise DataError(f"{path}: header {header} does not match schema columns {expected}")
        rows = []
        labels = []
        for i, cells in enumerate(reader, start=1):
            if len(cells) != len(schema.columns):
                raise DataError(f"{path}: row {i} has {len(cells)} cells, expected {len(schema.columns)}")
            encoded = np.zeros(schema.input_width)
            pos = 0
            for col, raw in zip(schema.columns, cells):
                value = _parse_cell(col, raw, i)
                if col.target:
                    labels.append(int(value))
                    continue
                if col.kind == "categorical":
                    encoded[pos + int(value)] = 1.0
                else:
                    encoded[pos] = value
                pos += col.width
            rows.append(encoded)
    X = np.array(rows) if rows else np.zeros((0, schema.input_width))
    y = np.array(labels, dtype=int) if schema.target_column else None
    return Dataset(schema, X, y, provenance={"kind": "real", "source": str(path)})


def _decode_row(schema: RecordSchema, row: np.ndarray, label) -> list[str]:
    cells = []
    pos = 0
    for col in schema.columns:
        if col.target:
            if col.kind == "categorical":
                cells.append(col.levels[int(label)])
            else:
                cells.append(str(int(label)))
            continue
        block = row[pos:pos + col.width]
        if col.kind == "binary":
            cells.append("1" if block[0] >= 0.5 else "0")
        elif col.kind == "categorical":
            cells.append(col.levels[int(np.argmax(block))])
        else:
            value = col.min + float(block[0]) * (col.max - col.min)
            cells.append(repr(value))
        pos += col.width
    return cells


def export_csv(dataset: Dataset, path) -> None:
    """Decode a dataset back into schema-ordered CSV text."""
    schema = dataset.schema
    if schema.target_column is not None and dataset.labels is None:
        raise DataError("schema declares a target column but the dataset has no labels")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([c.name for c in schema.columns])
    labels = dataset.labels if dataset.labels is not None else [None] * len(dataset)
    for row, label in zip(dataset.X, labels):
        writer.writerow(_decode_row(schema, row, label))
    Path(path).write_text(buf.getvalue())


def split(dataset: Dataset, train_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive train/test split; stratified when labeled."""
    if not 0.0 < train_frac < 1.0:
        raise DataError(f"train fraction {train_frac} must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n = len(dataset)
    if dataset.labels is None:
        perm = rng.permutation(n)
        cut = int(round(train_frac * n))
        tr_idx, te_idx = perm[:cut], perm[cut:]
    else:
        tr_parts, te_parts = [], []
        for cls in np.unique(dataset.labels):
            idx = np.flatnonzero(dataset.labels == cls)
            idx = idx[rng.permutation(len(idx))]
            cut = int(round(train_frac * len(idx)))
            tr_parts.append(idx[:cut])
            te_parts.append(idx[cut:])
        tr_idx = np.sort(np.concatenate(tr_parts))
        te_idx = np.sort(np.concatenate(te_parts))
    def take(idx, tag):
        return Dataset(dataset.schema, dataset.X[idx].copy(),
                       None if dataset.labels is None else dataset.labels[idx].copy(),
                       provenance={**dataset.provenance, "split": tag, "seed": seed})
    return take(tr_idx, "train"), take(te_idx, "test")


def binary_schema(width: int, target: bool = False) -> RecordSchema:
    cols = [Column(f"f{i}", "binary") for i in range(width)]
    if target:
        cols.append(Column("label", "binary", target=True))
    return RecordSchema(tuple(cols))


def continuous_schema(width: int, target: bool = False) -> RecordSchema:
    cols = [Column(f"x{i}", "continuous", min=0.0, max=1.0) for i in range(width)]
    if target:
        cols.append(Column("label", "binary", target=True))
    return RecordSchema(tuple(cols))


def make_toy_dataset(kind: str, n: int, width: int, seed: int,
                     stay_prob: float = 0.8, class_ratio: float = 0.5) -> Dataset:
    """Desk-scale stand-ins for restricted clinical data.

    markov_binary: binary chains where each feature repeats its left
    neighbor with probability ``stay_prob`` (adjacent-feature
    correlation for the 1-D conv stacks to pick up).
    gaussian_mixture: two unlabeled continuous clusters.
    two_class: a separable labeled mixture for supervised runs.
    """
    rng = np.random.default_rng(seed)
    if kind == "markov_binary":
        schema = binary_schema(width)
        rows = np.zeros((n, width))
        rows[:, 0] = rng.random(n) < 0.5
        stay = rng.random((n, width - 1)) < stay_prob
        for j in range(1, width):
            rows[:, j] = np.where(stay[:, j - 1], rows[:, j - 1], 1.0 - rows[:, j - 1])
        X = np.zeros((n, schema.input_width))
        X[:, :width] = rows
        return Dataset(schema, X, provenance={"kind": "toy", "toy": kind, "seed": seed})
    if kind == "gaussian_mixture":
        schema = continuous_schema(width)
        which = rng.random(n) < 0.5
        centers = np.where(which[:, None], 0.7, 0.3)
        rows = np.clip(centers + rng.normal(0.0, 0.08, size=(n, width)), 0.0, 1.0)
        X = np.zeros((n, schema.input_width))
        X[:, :width] = rows
        return Dataset(schema, X, provenance={"kind": "toy", "toy": kind, "seed": seed})
    if kind == "two_class":
        schema = continuous_schema(width, target=True)
        n_pos = int(round(n * class_ratio))
        labels = np.zeros(n, dtype=int)
        labels[:n_pos] = 1
        centers = np.where(labels[:, None] == 1, 0.65, 0.35)
        rows = np.clip(centers + rng.normal(0.0, 0.07, size=(n, width)), 0.0, 1.0)
        perm = rng.permutation(n)
        rows, labels = rows[perm], labels[perm]
        X = np.zeros((n, schema.input_width))
        X[:, :width] = rows
        return Dataset(schema, X, labels, provenance={"kind": "toy", "toy": kind, "seed": seed})
    raise DataError(f"unknown toy dataset kind {kind!r}")
