"""Uncertain time series, labeled datasets, TSV file I/O and noise injection.

File format (one dataset = one or two files):

* values file: UTF-8 TSV, one instance per line, first field is the class
  label (any token without tabs), the remaining ``m`` fields are decimal
  reals.  No header.  This matches the common time-series archive layout.
* uncertainty file (optional): UTF-8 TSV with the same number of lines and
  ``m`` non-negative reals per line, no label column.  Row ``i`` column ``j``
  pairs with values row ``i`` column ``j + 1``.

Reals are written with 17 significant digits, so a save/load round trip is
bit-exact for binary64.

Noise injection turns a certain dataset into an uncertain one: every value
gets an additive draw from ``N(0, sigma)`` and its recorded uncertainty is
the absolute difference between the noisy and the original value.  The
generator is pinned for reproducibility, see :func:`inject_noise`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import UncertainValue, UncertainVector

__all__ = [
    "UncertainSeries",
    "UncertainDataset",
    "NoiseSpec",
    "DatasetFormatError",
    "load_dataset",
    "save_dataset",
    "dataset_std",
    "inject_noise",
    "derive_split_seeds",
    "format_real",
]


class DatasetFormatError(ValueError):
    """A dataset file violates the documented TSV format."""


@dataclass(frozen=True)
class UncertainSeries:
    """A chronological sequence of uncertain measurements, optionally labeled."""

    values: UncertainVector
    label: str | None = None

    def __len__(self) -> int:
        return len(self.values)


class UncertainDataset:
    """Equal-length labeled uncertain series.

    All instances must share the same length; every instance carries a label.
    """

    __slots__ = ("instances",)

    def __init__(self, instances: Sequence[UncertainSeries]) -> None:
        instances = list(instances)
        if not instances:
            raise ValueError("a dataset must contain at least one instance")
        m = len(instances[0])
        for i, inst in enumerate(instances):
            if len(inst) != m:
                raise ValueError(
                    f"instance {i} has length {len(inst)}, expected {m}: datasets are equal-length"
                )
            if inst.label is None:
                raise ValueError(f"instance {i} has no label: dataset instances must be labeled")
        self.instances = instances

    def __len__(self) -> int:
        return len(self.instances)

    def __getitem__(self, i: int) -> UncertainSeries:
        return self.instances[i]

    def __iter__(self):
        return iter(self.instances)

    @property
    def series_length(self) -> int:
        return len(self.instances[0])

    @property
    def labels(self) -> list[str]:
        return [inst.label for inst in self.instances]  # type: ignore[misc]

    @property
    def class_set(self) -> set[str]:
        return set(self.labels)

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (best, uncertainty) matrices of shape (n_instances, m)."""
        best = np.stack([inst.values.best for inst in self.instances])
        unc = np.stack([inst.values.uncertainty for inst in self.instances])
        return best, unc

    def is_certain(self) -> bool:
        return all(not inst.values.uncertainty.any() for inst in self.instances)

    def __eq__(self, other) -> bool:
        if not isinstance(other, UncertainDataset):
            return NotImplemented
        return len(self) == len(other) and all(
            a.label == b.label and a.values == b.values for a, b in zip(self, other)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class NoiseSpec:
    """Parameters of one noise-injection run.

    ``fixed_scale=None`` means the Gaussian scale is the pooled population
    standard deviation of the target dataset; a float pins it explicitly.
    """

    seed: int = 0
    fixed_scale: float | None = None

    def __post_init__(self) -> None:
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.fixed_scale is not None and not self.fixed_scale > 0:
            raise ValueError(f"fixed scale must be > 0, got {self.fixed_scale}")


def format_real(x: float) -> str:
    """Render a float with 17 significant digits (round-trip safe for binary64)."""
    return format(float(x), ".17g")


def _parse_real(token: str, path: str, line_no: int, col_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DatasetFormatError(
            f"{path}:{line_no}: column {col_no}: not a decimal real: {token!r}"
        ) from None
    if not np.isfinite(value):
        raise DatasetFormatError(
            f"{path}:{line_no}: column {col_no}: value must be finite, got {token!r}"
        )
    return value


def _read_rows(path: str | Path) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            rows.append((line_no, line.split("\t")))
    return rows


def load_dataset(values_path: str | Path, uncertainty_path: str | Path | None = None) -> UncertainDataset:
    """Load a dataset from a values TSV and an optional uncertainty TSV.

    Without an uncertainty file every value gets uncertainty 0 (a certain
    dataset).  Raises :class:`DatasetFormatError` naming file, line and
    column on any malformed row, ragged lengths, or a shape mismatch between
    the two files.
    """
    vpath = str(values_path)
    vrows = _read_rows(values_path)
    if not vrows:
        raise DatasetFormatError(f"{vpath}: no instances found")

    labels: list[str] = []
    bests: list[list[float]] = []
    m: int | None = None
    for line_no, fields in vrows:
        if len(fields) < 2:
            raise DatasetFormatError(
                f"{vpath}:{line_no}: expected a label followed by at least one value"
            )
        label, value_tokens = fields[0], fields[1:]
        if not label:
            raise DatasetFormatError(f"{vpath}:{line_no}: column 1: missing label")
        if m is None:
            m = len(value_tokens)
        elif len(value_tokens) != m:
            raise DatasetFormatError(
                f"{vpath}:{line_no}: ragged row: {len(value_tokens)} values, expected {m}"
            )
        row = [
            _parse_real(tok, vpath, line_no, col)
            for col, tok in enumerate(value_tokens, start=2)
        ]
        labels.append(label)
        bests.append(row)

    assert m is not None
    if uncertainty_path is None:
        uncs = [[0.0] * m for _ in bests]
    else:
        upath = str(uncertainty_path)
        urows = _read_rows(uncertainty_path)
        if len(urows) != len(vrows):
            raise DatasetFormatError(
                f"{upath}: {len(urows)} rows but {vpath} has {len(vrows)}: shape mismatch"
            )
        uncs = []
        for line_no, fields in urows:
            if len(fields) != m:
                raise DatasetFormatError(
                    f"{upath}:{line_no}: {len(fields)} values, expected {m}: shape mismatch"
                )
            row = []
            for col, tok in enumerate(fields, start=1):
                value = _parse_real(tok, upath, line_no, col)
                if value < 0:
                    raise DatasetFormatError(
                        f"{upath}:{line_no}: column {col}: uncertainty must be >= 0, got {tok}"
                    )
                row.append(value)
            uncs.append(row)

    return UncertainDataset(
        [
            UncertainSeries(UncertainVector(b, u), label)
            for label, b, u in zip(labels, bests, uncs)
        ]
    )


def save_dataset(d: UncertainDataset, values_path: str | Path, uncertainty_path: str | Path) -> None:
    """Write a dataset to a values TSV and an uncertainty TSV.

    ``load_dataset(values_path, uncertainty_path)`` reproduces the dataset
    bit-exactly.
    """
    with open(values_path, "w", encoding="utf-8", newline="") as fh:
        for inst in d:
            fields = [inst.label] + [format_real(x) for x in inst.values.best]
            fh.write("\t".join(fields) + "\n")
    with open(uncertainty_path, "w", encoding="utf-8", newline="") as fh:
        for inst in d:
            fh.write("\t".join(format_real(x) for x in inst.values.uncertainty) + "\n")


def dataset_std(d: UncertainDataset) -> float:
    """Population standard deviation of all best values pooled together."""
    best, _ = d.stacked()
    return float(np.std(best))


def _instance_noise(seed: int, instance_index: int, size: int) -> np.ndarray:
    """Standard-normal draws for one instance, from its own pinned substream.

    The substream is ``SeedSequence(entropy=seed, spawn_key=(instance_index,))``
    feeding a Philox4x32-10 counter-based generator; each value consumes two
    64-bit uniform doubles ``u1, u2`` in sequence order and maps them through
    the Box-Muller transform ``sqrt(-2*ln(1 - u1)) * cos(2*pi*u2)``.  This
    derivation makes instances independent, so injection can be parallelized
    across instances without changing results.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(instance_index,))
    gen = np.random.Generator(np.random.Philox(ss))
    u = gen.random(2 * size)
    u1 = u[0::2]
    u2 = u[1::2]
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def inject_noise(d: UncertainDataset, spec: NoiseSpec) -> UncertainDataset:
    """Add Gaussian noise to a certain dataset and record it as uncertainty.

    Every value ``t`` becomes ``t + e`` with ``e ~ N(0, sigma)``; the stored
    uncertainty is ``|noisy - t|``, i.e. exactly the absolute injected noise.
    ``sigma`` is ``spec.fixed_scale`` or, when that is None, the pooled
    population standard deviation of ``d``.  The same spec always produces a
    bit-identical dataset.
    """
    if not d.is_certain():
        raise ValueError("noise injection expects a certain dataset (all uncertainties zero)")
    sigma = spec.fixed_scale if spec.fixed_scale is not None else dataset_std(d)
    if sigma == 0.0:
        warnings.warn(
            "dataset standard deviation is 0: no noise injected, output equals input",
            RuntimeWarning,
            stacklevel=2,
        )
        return UncertainDataset(list(d.instances))

    out = []
    for i, inst in enumerate(d):
        m = len(inst)
        e = sigma * _instance_noise(spec.seed, i, m)
        noisy = inst.values.best + e
        delta = np.abs(noisy - inst.values.best)
        out.append(UncertainSeries(UncertainVector(noisy, delta), inst.label))
    return UncertainDataset(out)


def derive_split_seeds(master_seed: int, dataset_name: str) -> tuple[int, int]:
    """Derive (train, test) injection seeds from a master seed and a dataset name.

    Keeps one user-facing seed while giving the two splits independent noise
    streams; the derivation depends only on the name, not on enumeration
    order.
    """
    entropy = [int(master_seed)] + list(dataset_name.encode("utf-8"))
    train_seed, test_seed = np.random.SeedSequence(entropy=entropy).generate_state(2, np.uint64)
    return int(train_seed), int(test_seed)
