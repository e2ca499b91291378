"""Schema-driven tabular data: CSV ingestion, one-hot encoding, splits.

A Schema declares every attribute (categorical with a fixed value list, or
numeric with a fixed [min, max] range) plus which attribute is the binary
decision and which is the binary protected attribute. Encoding produces a
matrix X in [0,1]^d that excludes the decision and protected columns; those
come back as the y and s vectors.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    """A value, row or file does not conform to the schema."""


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # "categorical" | "numeric"
    values: tuple[str, ...] | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.kind == "categorical":
            if not self.values:
                raise SchemaError(f"{self.name}: empty category list")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"{self.name}: duplicate categories")
        elif self.kind == "numeric":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise SchemaError(f"{self.name}: numeric range must satisfy lo < hi")
        else:
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")

    @property
    def width(self) -> int:
        return len(self.values) if self.kind == "categorical" else 1


@dataclass(frozen=True)
class Schema:
    attributes: tuple[Attribute, ...]
    decision: str
    decision_positive: str
    protected: str
    protected_value: str

    def __post_init__(self):
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate attribute names")
        for role, name in (("decision", self.decision), ("protected", self.protected)):
            attr = self.attribute(name)
            if attr is None:
                raise SchemaError(f"{role} attribute {name!r} not in schema")
            if attr.kind != "categorical" or len(attr.values) != 2:
                raise SchemaError(f"{role} attribute {name!r} must be binary categorical")
        if self.decision_positive not in self.attribute(self.decision).values:
            raise SchemaError("decision positive value not in its domain")
        if self.protected_value not in self.attribute(self.protected).values:
            raise SchemaError("protected-group value not in its domain")

    def attribute(self, name: str) -> Attribute | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def feature_attributes(self) -> tuple[Attribute, ...]:
        """Attributes that become X columns (decision and protected excluded)."""
        return tuple(
            a for a in self.attributes if a.name not in (self.decision, self.protected)
        )

    def negative_value(self, role: str) -> str:
        attr = self.attribute(self.decision if role == "decision" else self.protected)
        keep = self.decision_positive if role == "decision" else self.protected_value
        return next(v for v in attr.values if v != keep)


def schema_from_dict(doc: dict) -> Schema:
    attrs = []
    for spec in doc["attributes"]:
        if spec["kind"] == "categorical":
            attrs.append(Attribute(spec["name"], "categorical", tuple(spec["values"])))
        else:
            lo, hi = spec["range"]
            attrs.append(Attribute(spec["name"], "numeric", None, float(lo), float(hi)))
    return Schema(
        attributes=tuple(attrs),
        decision=doc["decision"]["name"],
        decision_positive=str(doc["decision"]["positive"]),
        protected=doc["protected"]["name"],
        protected_value=str(doc["protected"]["protected_value"]),
    )


def schema_to_dict(schema: Schema) -> dict:
    attrs = []
    for a in schema.attributes:
        if a.kind == "categorical":
            attrs.append({"name": a.name, "kind": "categorical", "values": list(a.values)})
        else:
            attrs.append({"name": a.name, "kind": "numeric", "range": [a.lo, a.hi]})
    return {
        "attributes": attrs,
        "decision": {"name": schema.decision, "positive": schema.decision_positive},
        "protected": {"name": schema.protected, "protected_value": schema.protected_value},
    }


def load_schema(path) -> Schema:
    with open(path) as fh:
        return schema_from_dict(json.load(fh))


def save_schema(schema: Schema, path) -> None:
    with open(path, "w") as fh:
        json.dump(schema_to_dict(schema), fh, indent=2)


@dataclass(frozen=True)
class RawTable:
    schema: Schema
    rows: tuple[tuple, ...]  # one value per attribute, schema order

    def __len__(self) -> int:
        return len(self.rows)


def _parse_value(attr: Attribute, raw, row_no: int):
    if attr.kind == "categorical":
        value = str(raw).strip()
        if value not in attr.values:
            raise SchemaError(
                f"row {row_no}: attribute {attr.name!r} has unknown value {value!r}"
            )
        return value
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise SchemaError(
            f"row {row_no}: attribute {attr.name!r} has unparsable numeric {raw!r}"
        ) from None
    if math.isnan(value) or value < attr.lo or value > attr.hi:
        raise SchemaError(
            f"row {row_no}: attribute {attr.name!r} value {value} outside "
            f"[{attr.lo}, {attr.hi}]"
        )
    return value


def make_table(schema: Schema, rows) -> RawTable:
    """Validate already-parsed rows (schema attribute order) into a RawTable."""
    checked = []
    for i, row in enumerate(rows):
        if len(row) != len(schema.attributes):
            raise SchemaError(f"row {i + 1}: expected {len(schema.attributes)} values")
        checked.append(tuple(_parse_value(a, v, i + 1) for a, v in zip(schema.attributes, row)))
    return RawTable(schema, tuple(checked))


def load_table(path, schema: Schema) -> RawTable:
    """Read an RFC-4180 CSV with header; every row validated, order preserved."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        names = [a.name for a in schema.attributes]
        missing = [n for n in names if n not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        index = [header.index(n) for n in names]
        rows = []
        for row_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise SchemaError(f"row {row_no}: expected {len(header)} fields, got {len(row)}")
            rows.append([row[i] for i in index])
    return make_table(schema, rows)


def write_raw_csv(table: RawTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([a.name for a in table.schema.attributes])
        for row in table.rows:
            writer.writerow(row)


@dataclass(frozen=True)
class EncodedDataset:
    """One-hot/min-max encoded table: X in [0,1]^(n x d), y and s in {0,1}^n.

    feature_map lists (attribute, start, stop) column ranges covering X.
    """

    X: np.ndarray
    y: np.ndarray
    s: np.ndarray
    feature_map: tuple[tuple[Attribute, int, int], ...]
    schema: Schema

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def take(self, idx) -> "EncodedDataset":
        return EncodedDataset(self.X[idx], self.y[idx], self.s[idx], self.feature_map, self.schema)


def build_feature_map(schema: Schema) -> tuple[tuple[Attribute, int, int], ...]:
    entries, col = [], 0
    for attr in schema.feature_attributes():
        entries.append((attr, col, col + attr.width))
        col += attr.width
    return tuple(entries)


def encode(raw: RawTable) -> EncodedDataset:
    """One-hot categoricals, min-max scale numerics; y and s split out of X."""
    schema = raw.schema
    fmap = build_feature_map(schema)
    d = fmap[-1][2] if fmap else 0
    n = len(raw.rows)
    X = np.zeros((n, d))
    y = np.zeros(n, dtype=np.int64)
    s = np.zeros(n, dtype=np.int64)
    attr_pos = {a.name: i for i, a in enumerate(schema.attributes)}
    dec_i, prot_i = attr_pos[schema.decision], attr_pos[schema.protected]
    for r, row in enumerate(raw.rows):
        y[r] = 1 if row[dec_i] == schema.decision_positive else 0
        s[r] = 1 if row[prot_i] == schema.protected_value else 0
        for attr, start, stop in fmap:
            value = row[attr_pos[attr.name]]
            if attr.kind == "categorical":
                X[r, start + attr.values.index(value)] = 1.0
            else:
                X[r, start] = (value - attr.lo) / (attr.hi - attr.lo)
    return EncodedDataset(X, y, s, fmap, schema)


def decode(x_row: np.ndarray, feature_map) -> dict:
    """Invert one row of X back to attribute values.

    Categorical groups decode by argmax (ties to the lowest column index);
    numerics unscale and clip to their declared range.
    """
    record = {}
    for attr, start, stop in feature_map:
        block = x_row[start:stop]
        if attr.kind == "categorical":
            record[attr.name] = attr.values[int(np.argmax(block))]
        else:
            value = float(block[0]) * (attr.hi - attr.lo) + attr.lo
            record[attr.name] = min(max(value, attr.lo), attr.hi)
    return record


def decoded_table(ds: EncodedDataset) -> RawTable:
    """Decode a whole EncodedDataset back into schema-order raw rows."""
    schema = ds.schema
    rows = []
    for r in range(len(ds)):
        record = decode(ds.X[r], ds.feature_map)
        record[schema.decision] = (
            schema.decision_positive if ds.y[r] == 1 else schema.negative_value("decision")
        )
        record[schema.protected] = (
            schema.protected_value if ds.s[r] == 1 else schema.negative_value("protected")
        )
        rows.append(tuple(record[a.name] for a in schema.attributes))
    return RawTable(schema, tuple(rows))


def split(ds: EncodedDataset, ratio: float, rng: np.random.Generator):
    """Disjoint, exhaustive split; train gets floor(n*ratio) rows."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    n = len(ds)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    perm = rng.permutation(n)
    cut = int(n * ratio)
    return ds.take(perm[:cut]), ds.take(perm[cut:])


def stratified_subsample(ds: EncodedDataset, n: int, rng: np.random.Generator) -> EncodedDataset:
    """Subsample n rows preserving the (s, y) cell proportions.

    Cell quotas use largest-remainder rounding, rows within a cell are drawn
    without replacement, so group rates and the risk difference carry over to
    the subsample up to integer rounding.
    """
    total = len(ds)
    if not 0 < n <= total:
        raise ValueError(f"subsample size must be in 1..{total}")
    cells = [(sv, yv) for sv in (0, 1) for yv in (0, 1)]
    members = {c: np.flatnonzero((ds.s == c[0]) & (ds.y == c[1])) for c in cells}
    quotas = {c: int(n * len(members[c]) / total) for c in cells}
    leftover = sorted(
        cells,
        key=lambda c: n * len(members[c]) / total - quotas[c],
        reverse=True,
    )
    for c in leftover[: n - sum(quotas.values())]:
        quotas[c] += 1
    picks = []
    for c in cells:
        if quotas[c] > len(members[c]):
            raise ValueError("subsample larger than a stratum")
        if quotas[c]:
            picks.append(rng.choice(members[c], size=quotas[c], replace=False))
    idx = rng.permutation(np.concatenate(picks))
    return ds.take(idx)


def export_encoded_csv(ds: EncodedDataset, path) -> None:
    """One column per encoded dimension plus y and s."""
    header = []
    for attr, start, stop in ds.feature_map:
        if attr.kind == "categorical":
            header.extend(f"{attr.name}={v}" for v in attr.values)
        else:
            header.append(attr.name)
    header += ["y", "s"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(len(ds)):
            writer.writerow([repr(float(v)) for v in ds.X[r]] + [int(ds.y[r]), int(ds.s[r])])


# --- toy one-dimensional dataset ---------------------------------------------
# Two protected groups with x ~ Normal(1, var 0.5) for s=1 and Normal(3,
# var 0.5) for s=0, an equal-weight mixture. The 0.5 is read as a variance
# (sigma = sqrt(0.5)); x is min-max scaled over [-1, 5] (mu +- 4 sigma-ish
# bounds shared by both groups).

TOY_LO, TOY_HI = -1.0, 5.0
TOY_MEANS = {1: 1.0, 0: 3.0}
TOY_SIGMA = math.sqrt(0.5)


def toy_schema() -> Schema:
    return Schema(
        attributes=(
            Attribute("x", "numeric", None, TOY_LO, TOY_HI),
            Attribute("group", "categorical", ("0", "1")),
            Attribute("outcome", "categorical", ("neg", "pos")),
        ),
        decision="outcome",
        decision_positive="pos",
        protected="group",
        protected_value="1",
    )


def sample_toy(n: int, rng: np.random.Generator) -> EncodedDataset:
    """Draw the two-Gaussian toy dataset; y is unused and left all-zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = (rng.random(n) < 0.5).astype(np.int64)
    mu = np.where(s == 1, TOY_MEANS[1], TOY_MEANS[0])
    x = rng.normal(mu, TOY_SIGMA)
    x = np.clip(x, TOY_LO, TOY_HI)
    schema = toy_schema()
    fmap = build_feature_map(schema)
    X = ((x - TOY_LO) / (TOY_HI - TOY_LO)).reshape(-1, 1)
    return EncodedDataset(X, np.zeros(n, dtype=np.int64), s, fmap, schema)


def toy_unscaled(values: np.ndarray) -> np.ndarray:
    """Map encoded toy x columns back to the raw axis."""
    return np.asarray(values) * (TOY_HI - TOY_LO) + TOY_LO
