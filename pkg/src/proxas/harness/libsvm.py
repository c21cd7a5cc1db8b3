"""LibSVM / SVMlight text format.

Each line is ``<label> <index>:<value> ...`` with 1-based, strictly
increasing feature indices. ``#`` starts a comment; blank lines are skipped.
"""
from __future__ import annotations

import os

import numpy as np

from ..problem import DatasetInstance


class LibSVMError(ValueError):
    """Malformed LibSVM input."""


def parse_label_map(spec: str) -> dict[float, float]:
    """``"0:-1,1:1"`` -> {0.0: -1.0, 1.0: 1.0}."""
    out = {}
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        src, _, dst = item.partition(":")
        out[float(src)] = float(dst)
    return out


def parse_libsvm(path, label_map=None, n_features=None) -> DatasetInstance:
    """Read a binary-classification LibSVM file.

    Labels must already be -1/+1 unless ``label_map`` maps every raw label to
    -1 or +1. ``n_features`` overrides the dimension inferred from the largest
    index seen.
    """
    if isinstance(label_map, str):
        label_map = parse_label_map(label_map)
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    labels: list[float] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise LibSVMError(f"{path}:{lineno}: bad label {tokens[0]!r}") from None
            if label_map is not None:
                if label not in label_map:
                    raise LibSVMError(f"{path}:{lineno}: label {tokens[0]} not in label map")
                label = label_map[label]
            if label not in (-1.0, 1.0):
                raise LibSVMError(f"{path}:{lineno}: label {tokens[0]} is not -1/+1; "
                                  "supply a label map")
            last = 0
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                if idx == "qid":
                    continue
                try:
                    j = int(idx)
                    x = float(val)
                except ValueError:
                    raise LibSVMError(f"{path}:{lineno}: bad feature {tok!r}") from None
                if not sep or j < 1:
                    raise LibSVMError(f"{path}:{lineno}: bad feature {tok!r}")
                if j <= last:
                    raise LibSVMError(f"{path}:{lineno}: feature indices must increase")
                last = j
                if x != 0.0:
                    indices.append(j - 1)
                    values.append(x)
            indptr.append(len(indices))
            labels.append(label)
    if not labels:
        raise LibSVMError(f"{path}: no examples")
    d = max(indices) + 1 if indices else 1
    if n_features is not None:
        if n_features < d:
            raise LibSVMError(f"{path}: index {d} exceeds n_features={n_features}")
        d = int(n_features)
    return DatasetInstance(np.array(indptr), np.array(indices, dtype=np.int64),
                           np.array(values, dtype=float), np.array(labels), d)


def write_libsvm(data: DatasetInstance, path) -> None:
    """Write with shortest round-trip float formatting (exact on re-read)."""
    lines = []
    for i in range(data.n):
        cols, vals = data.row(i)
        feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(cols, vals))
        lab = "+1" if data.labels[i] > 0 else "-1"
        lines.append(f"{lab} {feats}".rstrip())
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)
