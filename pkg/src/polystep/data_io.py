"""Dataset loading (LIBSVM and delimited text), standardization, synthetic
data generation, and trace serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace as dc_replace

import numpy as np


class LoadError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, d)
    labels: np.ndarray  # (n,), values in {-1, +1}
    name: str = ""
    standardized: bool = False
    constant_columns: tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class IterationRecord:
    seed: int
    k: int
    f_sub: float
    f_sub_avg_iterate: float
    dist_sq: float
    gamma: float


TRACE_HEADER = ("seed", "k", "f_sub", "f_sub_avg_iterate", "dist_sq", "gamma")


def _remap_labels(raw: np.ndarray) -> np.ndarray:
    vals = set(np.unique(raw).tolist())
    if vals <= {-1.0, 1.0}:
        return raw.astype(np.float64)
    if vals <= {0.0, 1.0}:
        return np.where(raw == 0.0, -1.0, 1.0)
    if vals <= {1.0, 2.0}:
        return np.where(raw == 2.0, -1.0, 1.0)
    raise LoadError(f"cannot map label values {sorted(vals)} to {{-1, +1}}")


def load_libsvm(path: str, name: str = "") -> Dataset:
    """Parse `label idx:val ...` lines; 1-based indices are densified and
    d is the maximum index seen."""
    rows = []
    max_idx = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                label = float(parts[0])
            except ValueError as e:
                raise LoadError(f"{path}:{lineno}: bad label {parts[0]!r}") from e
            feats = {}
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":")
                    idx, val = int(idx_s), float(val_s)
                except ValueError as e:
                    raise LoadError(f"{path}:{lineno}: bad pair {tok!r}") from e
                if idx < 1:
                    raise LoadError(f"{path}:{lineno}: index {idx} is not 1-based")
                feats[idx] = val
                max_idx = max(max_idx, idx)
            rows.append((label, feats))
    if not rows:
        raise LoadError(f"{path}: empty file")
    X = np.zeros((len(rows), max_idx))
    y = np.empty(len(rows))
    for i, (label, feats) in enumerate(rows):
        y[i] = label
        for idx, val in feats.items():
            X[i, idx - 1] = val
    return Dataset(X, _remap_labels(y), name=name or path)


def load_delimited(path: str, label_column: int = 0, name: str = "") -> Dataset:
    """Load a rectangular numeric table (comma or whitespace separated); one
    optional header row is skipped."""
    rows = []
    width = None
    header_skipped = False
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.replace(",", " ").split()
            try:
                row = [float(c) for c in cells]
            except ValueError:
                if not rows and not header_skipped:
                    header_skipped = True  # at most one header row
                    continue
                raise LoadError(f"{path}:{lineno}: non-numeric cell")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise LoadError(
                    f"{path}:{lineno}: ragged row ({len(row)} cells, expected {width})"
                )
            rows.append(row)
    if not rows:
        raise LoadError(f"{path}: no data rows")
    table = np.array(rows)
    y = table[:, label_column]
    X = np.delete(table, label_column, axis=1)
    return Dataset(X, _remap_labels(y), name=name or path)


def standardize(ds: Dataset) -> Dataset:
    """Center each feature column and divide by its population standard
    deviation. Zero-variance columns pass through unchanged and are flagged."""
    if ds.n < 2:
        raise ValueError("standardize needs at least 2 rows")
    mean = ds.features.mean(axis=0)
    std = ds.features.std(axis=0)  # population convention (divide by n)
    constant = std == 0.0
    safe = np.where(constant, 1.0, std)
    X = np.where(constant, ds.features, (ds.features - mean) / safe)
    return dc_replace(
        ds,
        features=X,
        standardized=True,
        constant_columns=tuple(np.flatnonzero(constant).tolist()),
    )


def make_synthetic(rng: np.random.Generator, n: int, d: int, name: str = "synthetic") -> Dataset:
    """i.i.d. standard-normal features with uniformly random +-1 labels."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    X = rng.standard_normal((n, d))
    y = rng.choice([-1.0, 1.0], size=n)
    return Dataset(X, y, name=name)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trace(records, path: str, fmt: str = "csv") -> None:
    """Write iteration records with round-trip-exact decimal floats."""
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(TRACE_HEADER)
                for r in records:
                    w.writerow(
                        [r.seed, r.k, _fmt(r.f_sub), _fmt(r.f_sub_avg_iterate),
                         _fmt(r.dist_sq), _fmt(r.gamma)]
                    )
        elif fmt == "json-lines":
            with open(path, "w") as fh:
                for r in records:
                    fh.write(json.dumps({
                        "seed": r.seed, "k": r.k, "f_sub": r.f_sub,
                        "f_sub_avg_iterate": r.f_sub_avg_iterate,
                        "dist_sq": r.dist_sq, "gamma": r.gamma,
                    }) + "\n")
        else:
            raise ValueError(f"unknown trace format {fmt!r}")
    except OSError as e:
        raise OSError(f"writing trace {path}: {e}") from e


def read_trace(path: str, fmt: str = "csv") -> list[IterationRecord]:
    out = []
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != TRACE_HEADER:
                raise LoadError(f"{path}: unexpected header {header}")
            for row in reader:
                out.append(IterationRecord(
                    int(row[0]), int(row[1]), float(row[2]), float(row[3]),
                    float(row[4]), float(row[5]),
                ))
    elif fmt == "json-lines":
        with open(path) as fh:
            for line in fh:
                d = json.loads(line)
                out.append(IterationRecord(
                    d["seed"], d["k"], d["f_sub"], d["f_sub_avg_iterate"],
                    d["dist_sq"], d["gamma"],
                ))
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    return out
