"""Dataset- and classifier-level fairness and utility measurements.

Sign convention throughout: the risk difference is P(positive | s=1) minus
P(positive | s=0), where s=1 is the group flagged by the schema's
protected-group value.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .data import EncodedDataset, decode

PMF_MODES = ("joint_xy", "joint_xys", "cond_s1", "cond_s0")

# Numeric attributes are quantised onto this many equal-width bins when rows
# are mapped to discrete outcomes for PMF estimation.
PMF_NUMERIC_BINS = 16


@dataclass
class FairnessReport:
    risk_difference: float
    ber: float | None = None
    epsilon: float | None = None
    epsilon_pass: bool | None = None
    dimensionwise: list = field(default_factory=list)
    pmf_distances: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "risk_difference": self.risk_difference,
            "ber": self.ber,
            "epsilon": self.epsilon,
            "epsilon_pass": self.epsilon_pass,
            "dimensionwise": self.dimensionwise,
            "pmf_distances": self.pmf_distances,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _group_masks(s: np.ndarray):
    s = np.asarray(s)
    m1, m0 = s == 1, s == 0
    if not m1.any() or not m0.any():
        raise ValueError("both s groups must be non-empty")
    return m1, m0


def risk_difference_data(ds: EncodedDataset) -> float:
    """Empirical P(y=1 | s=1) - P(y=1 | s=0) of a labelled dataset."""
    m1, m0 = _group_masks(ds.s)
    return float(np.mean(ds.y[m1]) - np.mean(ds.y[m0]))


def risk_difference_classifier(predict, ds: EncodedDataset) -> float:
    """P(prediction=1 | s=1) - P(prediction=1 | s=0) for predict: X -> {0,1}."""
    m1, m0 = _group_masks(ds.s)
    yhat = np.asarray(predict(ds.X))
    return float(np.mean(yhat[m1]) - np.mean(yhat[m0]))


def balanced_error_rate(predict_s, X: np.ndarray, s: np.ndarray) -> float:
    """Average class-conditioned error of a protected-attribute predictor.

    BER = [P(f(X)=0 | s=1) + P(f(X)=1 | s=0)] / 2; exactly 0.5 for any
    constant predictor.
    """
    m1, m0 = _group_masks(s)
    f = np.asarray(predict_s(X))
    return float((np.mean(f[m1] == 0) + np.mean(f[m0] == 1)) / 2.0)


def epsilon_fair(ds: EncodedDataset, epsilon: float, rng, svm_c: float = 1.0):
    """Disparate-impact audit: can a linear-SVM attacker recover s from X?

    The attacker trains on a 1:1 split of (X, s) and its BER is measured on
    the held-out half. Returns (passed, ber) with passed = (ber > epsilon).
    """
    from .classifiers import predict as clf_predict
    from .classifiers import train_linear_svm

    from .data import split

    train_ds, test_ds = split(ds, 0.5, rng)
    model = train_linear_svm(train_ds.X, train_ds.s, svm_c, rng)
    ber = balanced_error_rate(lambda X: clf_predict(model, X), test_ds.X, test_ds.s)
    return ber > epsilon, ber


def _column_labels(ds: EncodedDataset) -> list[str]:
    labels = []
    for attr, lo, hi in ds.feature_map:
        if attr.kind == "categorical":
            labels.extend(f"{attr.name}={v}" for v in attr.values)
        else:
            labels.append(attr.name)
    labels.append("y")
    return labels


def dimensionwise_probability(ds: EncodedDataset):
    """Mean of each encoded column (plus y): overall and per s group.

    Returns a list of (column, p_s1, p_s0, p_overall); the conditional
    entries are None when a group is empty.
    """
    mat = np.hstack([ds.X, ds.y.reshape(-1, 1).astype(float)])
    s = ds.s
    m1, m0 = s == 1, s == 0
    overall = mat.mean(axis=0)
    p1 = mat[m1].mean(axis=0) if m1.any() else None
    p0 = mat[m0].mean(axis=0) if m0.any() else None
    out = []
    for i, label in enumerate(_column_labels(ds)):
        out.append(
            (
                label,
                float(p1[i]) if p1 is not None else None,
                float(p0[i]) if p0 is not None else None,
                float(overall[i]),
            )
        )
    return out


def export_dimensionwise_csv(ds_a: EncodedDataset, ds_b: EncodedDataset, path) -> None:
    """Scatter-plot table comparing dataset A (reference) with dataset B.

    p_s1/p_s0 are dataset B's conditional rates (B is the audited dataset).
    """
    rows_a = dimensionwise_probability(ds_a)
    rows_b = dimensionwise_probability(ds_b)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "p_overall_A", "p_overall_B", "p_s1", "p_s0"])
        for a, b in zip(rows_a, rows_b):
            writer.writerow([a[0], a[3], b[3], b[1], b[2]])


def _outcome_key(ds: EncodedDataset, row: int, with_s: bool):
    record = decode(ds.X[row], ds.feature_map)
    parts = []
    for attr, lo, hi in ds.feature_map:
        value = record[attr.name]
        if attr.kind == "numeric":
            # quantise so continuous attributes have a finite outcome space
            frac = (value - attr.lo) / (attr.hi - attr.lo)
            value = min(int(frac * PMF_NUMERIC_BINS), PMF_NUMERIC_BINS - 1)
        parts.append(value)
    parts.append(int(ds.y[row]))
    if with_s:
        parts.append(int(ds.s[row]))
    return tuple(parts)


def _empirical_pmf(ds: EncodedDataset, mode: str) -> dict:
    with_s = mode == "joint_xys"
    if mode in ("cond_s1", "cond_s0"):
        keep = np.flatnonzero(ds.s == (1 if mode == "cond_s1" else 0))
        if keep.size == 0:
            raise ValueError(f"{mode}: the conditioning group is empty")
    else:
        keep = np.arange(len(ds))
    counts: dict = {}
    for row in keep:
        key = _outcome_key(ds, int(row), with_s)
        counts[key] = counts.get(key, 0) + 1
    total = len(keep)
    return {k: c / total for k, c in counts.items()}


def pmf_distance(ds_a: EncodedDataset, ds_b: EncodedDataset, mode: str) -> float:
    """Euclidean distance between the two empirical PMFs.

    Rows map to discrete outcomes (decoded records with numerics quantised,
    plus y, plus s for joint_xys); the PMFs live on the union support, so an
    outcome unseen in one dataset contributes that dataset's probability 0.
    """
    if mode not in PMF_MODES:
        raise ValueError(f"mode must be one of {PMF_MODES}")
    if ds_a.feature_map != ds_b.feature_map:
        raise ValueError("datasets must share a feature map")
    pa = _empirical_pmf(ds_a, mode)
    pb = _empirical_pmf(ds_b, mode)
    support = set(pa) | set(pb)
    sq = 0.0
    for key in support:
        diff = pa.get(key, 0.0) - pb.get(key, 0.0)
        sq += diff * diff
    return float(np.sqrt(sq))


def jsd(p, q) -> float:
    """Jensen-Shannon divergence with natural log; 0 <= jsd <= log 2.

    Both inputs must be probability vectors on the same support (equal length,
    each summing to 1 within 1e-9).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("supports differ in size")
    for name, vec in (("p", p), ("q", q)):
        if np.any(vec < 0):
            raise ValueError(f"{name} has negative mass")
        if abs(vec.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} is not normalized (sum={vec.sum()!r})")
    m = 0.5 * (p + q)
    out = 0.0
    for vec in (p, q):
        mask = vec > 0
        out += 0.5 * float(np.sum(vec[mask] * np.log(vec[mask] / m[mask])))
    return out
