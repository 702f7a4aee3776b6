"""Datasets, CSV ingestion, splits and the biased synthetic generator."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AmbiguousColumns,
    CensoringViolation,
    DegenerateSplit,
    EmptyDataset,
    InvalidSpec,
    MissingColumn,
    NonBinaryValue,
    ScoreOutOfRange,
    UnparseableNumeric,
)


class CensoringWarning(UserWarning):
    """A feature column is identical to the sensitive attribute."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TabularDataset:
    features: np.ndarray
    labels: np.ndarray
    sensitive: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        n = X.shape[0]
        if n < 1:
            raise EmptyDataset("dataset has no rows")
        y = np.asarray(self.labels)
        s = np.asarray(self.sensitive)
        if y.shape != (n,) or s.shape != (n,):
            raise ValueError("features, labels and sensitive must have the same row count")
        for name, v in (("labels", y), ("sensitive", s)):
            if not np.isin(v, (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        if not np.isfinite(X).all():
            raise ValueError("features must be finite")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError("feature_names length does not match column count")
        object.__setattr__(self, "features", _frozen(X, float))
        object.__setattr__(self, "labels", _frozen(y, np.int64))
        object.__setattr__(self, "sensitive", _frozen(s, np.int64))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "TabularDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return TabularDataset(self.features[idx], self.labels[idx], self.sensitive[idx],
                              self.feature_names)

    def __eq__(self, other):
        if not isinstance(other, TabularDataset):
            return NotImplemented
        return (self.feature_names == other.feature_names
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.sensitive, other.sensitive))

    __hash__ = None


@dataclass(frozen=True)
class PredictionSet:
    """Model outputs ingested from an external scorer.

    ``kind`` is ``"soft"`` (scores in [0, 1]) or ``"hard"`` (labels in {0, 1}).
    """

    kind: str
    values: np.ndarray
    sensitive: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return len(self.values)


def _parse_binary(raw: str, row: int, col: str) -> int:
    v = raw.strip()
    if v in ("0", "1"):
        return int(v)
    try:
        f = float(v)
    except ValueError:
        raise NonBinaryValue(row, col, raw) from None
    if f in (0.0, 1.0):
        return int(f)
    raise NonBinaryValue(row, col, raw)


def _parse_float(raw: str, row: int, col: str) -> float:
    try:
        f = float(raw)
    except ValueError:
        raise UnparseableNumeric(row, col, raw) from None
    if not math.isfinite(f):
        raise UnparseableNumeric(row, col, raw)
    return f


def _read_rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path} is empty") from None
        rows = [r for r in reader if r]
    return header, rows


def check_censoring(features: np.ndarray, sensitive: np.ndarray, names: Sequence[str],
                    strict: bool = False) -> list:
    """Return the feature columns that duplicate the sensitive attribute.

    Warns by default; raises CensoringViolation when ``strict``.
    """
    s = np.asarray(sensitive, dtype=float)
    dup = [names[j] for j in range(features.shape[1]) if np.array_equal(features[:, j], s)]
    if dup:
        msg = f"feature column(s) {dup} duplicate the sensitive attribute"
        if strict:
            raise CensoringViolation(msg)
        warnings.warn(msg, CensoringWarning, stacklevel=3)
    return dup


def load_csv(path, label_col: str = "y", sensitive_col: str = "s",
             strict: bool = False) -> TabularDataset:
    header, rows = _read_rows(path)
    for col in (label_col, sensitive_col):
        if col not in header:
            raise MissingColumn(col)
    if not rows:
        raise EmptyDataset(f"{path} has no data rows")
    li, si = header.index(label_col), header.index(sensitive_col)
    fcols = [j for j in range(len(header)) if j not in (li, si)]
    names = tuple(header[j] for j in fcols)

    X = np.empty((len(rows), len(fcols)))
    y = np.empty(len(rows), dtype=np.int64)
    s = np.empty(len(rows), dtype=np.int64)
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise UnparseableNumeric(i, "<row>", ",".join(r))
        y[i] = _parse_binary(r[li], i, label_col)
        s[i] = _parse_binary(r[si], i, sensitive_col)
        for k, j in enumerate(fcols):
            X[i, k] = _parse_float(r[j], i, header[j])
    check_censoring(X, s, names, strict=strict)
    return TabularDataset(X, y, s, names)


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def dataset_to_csv_text(ds: TabularDataset, label_col: str = "y", sensitive_col: str = "s") -> str:
    lines = [",".join(list(ds.feature_names) + [label_col, sensitive_col])]
    for i in range(ds.n):
        vals = [repr(float(v)) for v in ds.features[i]]
        vals += [str(int(ds.labels[i])), str(int(ds.sensitive[i]))]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_csv(ds: TabularDataset, path, label_col: str = "y", sensitive_col: str = "s") -> None:
    # repr() of a float round-trips exactly
    _atomic_write_text(path, dataset_to_csv_text(ds, label_col, sensitive_col))


def load_predictions_csv(path) -> PredictionSet:
    header, rows = _read_rows(path)
    has_score, has_hard = "score" in header, "hard" in header
    if has_score and has_hard:
        raise AmbiguousColumns("both 'score' and 'hard' columns present")
    if not (has_score or has_hard):
        raise MissingColumn("score")
    if "s" not in header:
        raise MissingColumn("s")
    if not rows:
        raise EmptyDataset(f"{path} has no data rows")
    kind = "soft" if has_score else "hard"
    vi = header.index("score" if has_score else "hard")
    si = header.index("s")
    yi = header.index("y") if "y" in header else None

    values, s, y = [], [], []
    for i, r in enumerate(rows):
        if kind == "soft":
            v = _parse_float(r[vi], i, "score")
            if not 0.0 <= v <= 1.0:
                raise ScoreOutOfRange(i, v)
        else:
            v = _parse_binary(r[vi], i, "hard")
        values.append(v)
        s.append(_parse_binary(r[si], i, "s"))
        if yi is not None:
            y.append(_parse_binary(r[yi], i, "y"))
    return PredictionSet(
        kind=kind,
        values=np.asarray(values, dtype=float if kind == "soft" else np.int64),
        sensitive=np.asarray(s, dtype=np.int64),
        labels=np.asarray(y, dtype=np.int64) if yi is not None else None,
    )


# -- splits ----------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    tr: np.ndarray
    te: np.ndarray
    aux_tr: np.ndarray
    aux_te: np.ndarray
    seed: int = 0

    def __post_init__(self):
        for name in ("tr", "te", "aux_tr", "aux_te"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int64))

    def validate(self, n: int) -> None:
        tr, te = set(self.tr.tolist()), set(self.te.tolist())
        a, b = set(self.aux_tr.tolist()), set(self.aux_te.tolist())
        if tr & te or a & b or not (a | b) <= te:
            raise DegenerateSplit("split index sets overlap")
        if (tr | te) != set(range(n)):
            raise DegenerateSplit("tr and te do not cover the dataset")

    def to_dict(self) -> dict:
        return {"seed": int(self.seed), "tr": self.tr.tolist(), "te": self.te.tolist(),
                "aux_tr": self.aux_tr.tolist(), "aux_te": self.aux_te.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitPlan":
        return cls(d["tr"], d["te"], d["aux_tr"], d["aux_te"], int(d.get("seed", 0)))

    def __eq__(self, other):
        if not isinstance(other, SplitPlan):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def save_split(plan: SplitPlan, path) -> None:
    _atomic_write_text(path, json.dumps(plan.to_dict()))


def load_split(path) -> SplitPlan:
    return SplitPlan.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _take(rng, pool: np.ndarray, k: int):
    perm = rng.permutation(pool)
    return perm[:k], perm[k:]


def make_split(dataset: TabularDataset, te_fraction: float = 0.2, aux_tr_fraction: float = 0.8,
               seed: int = 0, stratify_on_s: bool = True) -> SplitPlan:
    """Split into train/test, then the test part into the adversary's halves.

    ``|te| = round(te_fraction * n)`` and ``|aux_tr| = floor(aux_tr_fraction * |te|)``.
    With ``stratify_on_s`` every part keeps the global S=1 fraction within one record.
    """
    for name, f in (("te_fraction", te_fraction), ("aux_tr_fraction", aux_tr_fraction)):
        if not 0.0 < f < 1.0:
            raise DegenerateSplit(f"{name} must lie in (0, 1), got {f}")
    n = dataset.n
    n_te = _round_half_up(te_fraction * n)
    n_aux_tr = int(math.floor(aux_tr_fraction * n_te))
    if min(n - n_te, n_te, n_aux_tr, n_te - n_aux_tr) < 1:
        raise DegenerateSplit(f"n={n} is too small for the requested fractions")

    rng = np.random.default_rng(seed)
    idx = np.arange(n)
    if not stratify_on_s:
        te, tr = _take(rng, idx, n_te)
        aux_tr, aux_te = _take(rng, te, n_aux_tr)
    else:
        s = dataset.sensitive
        ones, zeros = idx[s == 1], idx[s == 0]
        if len(ones) == 0 or len(zeros) == 0:
            raise DegenerateSplit("stratified split needs both S classes")
        frac = len(ones) / n
        te1 = min(_round_half_up(frac * n_te), len(ones))
        te0 = n_te - te1
        if te0 > len(zeros):
            te0 = len(zeros)
            te1 = n_te - te0
        te_ones, tr_ones = _take(rng, ones, te1)
        te_zeros, tr_zeros = _take(rng, zeros, te0)
        a1 = min(_round_half_up(frac * n_aux_tr), te1)
        a0 = n_aux_tr - a1
        if a0 > te0:
            a0 = te0
            a1 = n_aux_tr - a0
        aux_ones, rest_ones = _take(rng, te_ones, a1)
        aux_zeros, rest_zeros = _take(rng, te_zeros, a0)
        tr = np.concatenate([tr_ones, tr_zeros])
        te = np.concatenate([te_ones, te_zeros])
        aux_tr = np.concatenate([aux_ones, aux_zeros])
        aux_te = np.concatenate([rest_ones, rest_zeros])
        for name, part in (("tr", tr), ("te", te), ("aux_tr", aux_tr), ("aux_te", aux_te)):
            if len(np.unique(s[part])) < 2:
                raise DegenerateSplit(f"split {name} holds a single S class")
    return SplitPlan(np.sort(tr), np.sort(te), np.sort(aux_tr), np.sort(aux_te), seed)


# -- synthetic data --------------------------------------------------------

@dataclass(frozen=True)
class SynthSpec:
    n: int = 2000
    p_s1: float = 0.5
    p_y1_given_s: tuple = (0.5, 0.5)
    mean_shift: float = 1.0
    leak_shift: float = 0.0
    d: int = 2
    exact_frequency: bool = False

    def validate(self) -> None:
        probs = [self.p_s1, *self.p_y1_given_s]
        if len(self.p_y1_given_s) != 2:
            raise InvalidSpec("p_y1_given_s must be a pair")
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise InvalidSpec(f"probabilities must lie in [0, 1], got {probs}")
        if self.n < 4:
            raise InvalidSpec(f"n must be at least 4, got {self.n}")
        if self.d < 1:
            raise InvalidSpec("d must be at least 1")
        if self.mean_shift < 0 or self.leak_shift < 0:
            raise InvalidSpec("mean_shift and leak_shift must be non-negative")

    def cell_probabilities(self) -> np.ndarray:
        """P(S=s, Y=y) ordered (0,0), (0,1), (1,0), (1,1)."""
        p0, p1 = self.p_y1_given_s
        ps = self.p_s1
        return np.array([(1 - ps) * (1 - p0), (1 - ps) * p0, ps * (1 - p1), ps * p1])


def largest_remainder(n: int, probs) -> np.ndarray:
    """Integer counts summing to ``n`` closest to ``n * probs``.

    Leftover units go to the largest fractional parts; ties go to the lower index.
    """
    quotas = n * np.asarray(probs, dtype=float)
    counts = np.floor(quotas).astype(np.int64)
    left = n - int(counts.sum())
    order = sorted(range(len(quotas)), key=lambda k: (-(quotas[k] - counts[k]), k))
    for k in order[:left]:
        counts[k] += 1
    return counts


def synth_biased(spec: SynthSpec, seed: int = 0) -> TabularDataset:
    """Gaussian features whose first axis tracks Y and second axis tracks S.

    ``x = mean_shift * y * e1 + leak_shift * s * e2 + N(0, I)``. With ``d == 1`` both
    shifts land on the single axis.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    if spec.exact_frequency:
        counts = largest_remainder(spec.n, spec.cell_probabilities())
        s = np.repeat([0, 0, 1, 1], counts)
        y = np.repeat([0, 1, 0, 1], counts)
        perm = rng.permutation(spec.n)
        s, y = s[perm], y[perm]
    else:
        s = (rng.random(spec.n) < spec.p_s1).astype(np.int64)
        p = np.where(s == 1, spec.p_y1_given_s[1], spec.p_y1_given_s[0])
        y = (rng.random(spec.n) < p).astype(np.int64)
    X = rng.standard_normal((spec.n, spec.d))
    X[:, 0] += spec.mean_shift * y
    X[:, min(1, spec.d - 1)] += spec.leak_shift * s
    return TabularDataset(X, y, s)


def class_balance(dataset) -> tuple:
    """Empirical (P(S=1), P(Y=1))."""
    return float(np.mean(dataset.sensitive)), float(np.mean(dataset.labels))
