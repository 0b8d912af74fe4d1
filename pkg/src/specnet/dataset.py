"""Soil-spectra dataset handling: ingestion, preprocessing, and splitting.

The pipeline mirrors the survey data layout: raw spectra carry 4200
reflectance bands (400-2500 nm at 0.5 nm); dimensionality reduction averages
groups of 16-17 neighboring bands down to 256. Soil class labels are one of
the four main texture groups L, S, T, U.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DatasetError

RAW_BANDS = 4200
REDUCED_BANDS = 256

#: Allowed slack, in percentage points, on clay+silt+sand == 100.
COMPOSITION_TOLERANCE = 1.5

#: Maximum disagreement tolerated between duplicate rows of one sample id.
DUPLICATE_TOLERANCE = 0.5


class SoilClass(enum.Enum):
    """The four main soil texture groups; enum value is the class index."""

    L = 0  # loam
    S = 1  # sand
    T = 2  # clay
    U = 3  # silt

    @classmethod
    def from_name(cls, name: str) -> "SoilClass":
        try:
            return cls[name]
        except KeyError:
            raise DatasetError(f"unknown soil class {name!r}; expected one of L, S, T, U") from None


N_CLASSES = len(SoilClass)
CLASS_ORDER = tuple(SoilClass)


@dataclass
class Sample:
    """One soil observation: id, spectrum, composition, optional label."""

    sample_id: str
    spectrum: np.ndarray
    clay_pct: Optional[float] = None
    silt_pct: Optional[float] = None
    sand_pct: Optional[float] = None
    label: Optional[SoilClass] = None


@dataclass
class DatasetSplit:
    train: list[Sample]
    validation: list[Sample]
    test: list[Sample]

    def subsets(self):
        return {"train": self.train, "validation": self.validation, "test": self.test}


def validate_composition(clay: float, silt: float, sand: float, where: str = "") -> None:
    ctx = f" ({where})" if where else ""
    if min(clay, silt, sand) < 0:
        raise DatasetError(f"negative soil fraction clay={clay} silt={silt} sand={sand}{ctx}")
    total = clay + silt + sand
    if abs(total - 100.0) > COMPOSITION_TOLERANCE:
        raise DatasetError(
            f"clay+silt+sand = {total}, outside 100 +/- {COMPOSITION_TOLERANCE}{ctx}"
        )


# ---------------------------------------------------------------------------
# Band reduction
# ---------------------------------------------------------------------------


def band_group_boundaries(n_in: int = RAW_BANDS, n_out: int = REDUCED_BANDS) -> np.ndarray:
    """Start indices of the ``n_out`` contiguous input-band groups (plus end).

    Group i spans ``[floor(i*n_in/n_out), floor((i+1)*n_in/n_out))`` - the
    Bresenham line, which spreads the one-band-larger groups evenly across
    the spectrum. For 4200 -> 256 this yields 152 groups of 16 and 104
    groups of 17.
    """
    return np.arange(n_out + 1, dtype=np.int64) * n_in // n_out


def reduce_bands(spectrum) -> np.ndarray:
    """Average contiguous groups of 16-17 raw bands down to 256 bands."""
    arr = np.asarray(spectrum, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[0] == 1:
        arr = arr[0]
    if arr.ndim != 1 or arr.size != RAW_BANDS:
        raise DatasetError(f"raw spectrum must have {RAW_BANDS} bands, got shape {np.shape(spectrum)}")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise DatasetError(f"non-finite reflectance at band {int(bad[0])}")
    boundaries = band_group_boundaries()
    sums = np.add.reduceat(arr, boundaries[:-1])
    sizes = np.diff(boundaries)
    return sums / sizes


# ---------------------------------------------------------------------------
# Duplicate removal
# ---------------------------------------------------------------------------


def deduplicate(samples: Sequence[Sample]) -> list[Sample]:
    """Collapse repeated sample ids to one Sample each.

    The retained spectrum is the per-band mean over all duplicates; soil
    percentages come from the first occurrence. Duplicates whose percentages
    disagree by more than 0.5 points are rejected.
    """
    order: list[str] = []
    groups: dict[str, list[Sample]] = {}
    for sample in samples:
        if sample.sample_id not in groups:
            groups[sample.sample_id] = []
            order.append(sample.sample_id)
        groups[sample.sample_id].append(sample)

    out = []
    for sample_id in order:
        group = groups[sample_id]
        first = group[0]
        for dup in group[1:]:
            for field in ("clay_pct", "silt_pct", "sand_pct"):
                a, b = getattr(first, field), getattr(dup, field)
                if (a is None) != (b is None) or (
                    a is not None and abs(a - b) > DUPLICATE_TOLERANCE
                ):
                    raise DatasetError(
                        f"sample {sample_id!r}: conflicting {field} among duplicates ({a} vs {b})"
                    )
            if dup.spectrum.shape != first.spectrum.shape:
                raise DatasetError(
                    f"sample {sample_id!r}: duplicate spectra lengths differ "
                    f"({dup.spectrum.size} vs {first.spectrum.size})"
                )
        spectrum = np.mean([s.spectrum for s in group], axis=0)
        out.append(replace(first, spectrum=spectrum))
    return out


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split(samples: Sequence[Sample], ratios=(0.6, 0.2, 0.2), seed=0,
          stratified: bool = False) -> DatasetSplit:
    """Deterministic random split into train/validation/test.

    Samples are permuted under the seed and cut at rounded boundaries
    (half-up on n*ratio). With ``stratified=True`` the same rule applies
    within each class, preserving class balance.
    """
    samples = list(samples)
    if len(samples) < 3:
        raise DatasetError(f"need at least 3 samples to split, got {len(samples)}")
    ids = [s.sample_id for s in samples]
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate sample ids; run deduplicate before split")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) <= 0:
        raise DatasetError(f"ratios must be three positive numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {sum(ratios)}")

    rng = np.random.default_rng(seed)

    def cut(indices: np.ndarray):
        n = len(indices)
        n_train = _round_half_up(n * ratios[0])
        n_val = _round_half_up(n * ratios[1])
        n_val = min(n_val, n - n_train)
        return indices[:n_train], indices[n_train:n_train + n_val], indices[n_train + n_val:]

    if stratified:
        if any(s.label is None for s in samples):
            raise DatasetError("stratified split requires every sample to be labeled")
        parts = ([], [], [])
        for cls in CLASS_ORDER:
            cls_idx = np.array([i for i, s in enumerate(samples) if s.label is cls], dtype=np.int64)
            if cls_idx.size == 0:
                continue
            for part, chunk in zip(parts, cut(rng.permutation(cls_idx))):
                part.extend(chunk.tolist())
        train_idx, val_idx, test_idx = (np.array(p, dtype=np.int64) for p in parts)
    else:
        train_idx, val_idx, test_idx = cut(rng.permutation(len(samples)))

    pick = lambda idx: [samples[i] for i in idx]
    return DatasetSplit(train=pick(train_idx), validation=pick(val_idx), test=pick(test_idx))


# ---------------------------------------------------------------------------
# CSV input/output
# ---------------------------------------------------------------------------

RAW_FORMAT = "raw_lucas_like"
REDUCED_FORMAT = "reduced"


def _expected_header(fmt: str) -> list[str]:
    if fmt == RAW_FORMAT:
        return ["sample_id", "clay_pct", "silt_pct", "sand_pct"] + [f"b{i:04d}" for i in range(RAW_BANDS)]
    if fmt == REDUCED_FORMAT:
        return ["sample_id", "label"] + [f"b{i:03d}" for i in range(REDUCED_BANDS)]
    raise DatasetError(f"unknown CSV format {fmt!r}; expected {RAW_FORMAT!r} or {REDUCED_FORMAT!r}")


def load_csv(path, fmt: str) -> list[Sample]:
    """Parse a raw or reduced dataset CSV; errors carry 1-based line numbers."""
    expected = _expected_header(fmt)
    samples = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file (missing header)") from None
        if header != expected:
            raise DatasetError(
                f"{path}: header mismatch for format {fmt!r}: "
                f"got {len(header)} columns starting {header[:5]}, "
                f"expected {len(expected)} starting {expected[:5]}"
            )
        for row in reader:
            line = reader.line_num
            if len(row) != len(expected):
                raise DatasetError(f"{path}: row {line}: {len(row)} cells, expected {len(expected)}")
            if fmt == RAW_FORMAT:
                sample_id = row[0]
                try:
                    clay, silt, sand = (float(v) for v in row[1:4])
                except ValueError:
                    raise DatasetError(f"{path}: row {line}: non-numeric soil percentage") from None
                spectrum = _parse_bands(row[4:], path, line)
                validate_composition(clay, silt, sand, where=f"{path}: row {line}")
                samples.append(Sample(sample_id, spectrum, clay, silt, sand))
            else:
                sample_id, label_txt = row[0], row[1]
                label = SoilClass.from_name(label_txt) if label_txt else None
                spectrum = _parse_bands(row[2:], path, line)
                samples.append(Sample(sample_id, spectrum, label=label))
    return samples


def _parse_bands(cells, path, line) -> np.ndarray:
    try:
        return np.array(cells, dtype=np.float64)
    except ValueError:
        for j, cell in enumerate(cells):
            try:
                float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: row {line}: non-numeric reflectance {cell!r} in band column {j}"
                ) from None
        raise


def write_csv(samples: Sequence[Sample], path, fmt: str) -> None:
    """Write samples in the given schema; floats round-trip exactly (repr)."""
    expected = _expected_header(fmt)
    n_bands = RAW_BANDS if fmt == RAW_FORMAT else REDUCED_BANDS
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(expected)
        for sample in samples:
            if sample.spectrum.size != n_bands:
                raise DatasetError(
                    f"sample {sample.sample_id!r}: {sample.spectrum.size} bands, format needs {n_bands}"
                )
            bands = [repr(float(v)) for v in sample.spectrum]
            if fmt == RAW_FORMAT:
                if None in (sample.clay_pct, sample.silt_pct, sample.sand_pct):
                    raise DatasetError(f"sample {sample.sample_id!r}: raw format needs soil percentages")
                row = [sample.sample_id, repr(float(sample.clay_pct)),
                       repr(float(sample.silt_pct)), repr(float(sample.sand_pct))] + bands
            else:
                row = [sample.sample_id, sample.label.name if sample.label else ""] + bands
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Array conversion and normalization
# ---------------------------------------------------------------------------


def to_arrays(samples: Sequence[Sample], require_labels: bool = False):
    """Stack spectra into (n, bands) and labels into (n,) class indices.

    Returns ``(X, y)``; ``y`` is None when any sample is unlabeled (an error
    if labels are required).
    """
    if not samples:
        raise DatasetError("no samples")
    lengths = {s.spectrum.size for s in samples}
    if len(lengths) != 1:
        raise DatasetError(f"inconsistent spectrum lengths {sorted(lengths)}")
    X = np.stack([np.asarray(s.spectrum, dtype=np.float64).reshape(-1) for s in samples])
    missing = [s.sample_id for s in samples if s.label is None]
    if missing:
        if require_labels:
            raise DatasetError(f"unlabeled sample(s): {missing[:5]}")
        return X, None
    y = np.array([s.label.value for s in samples], dtype=np.int64)
    return X, y


def class_counts(samples: Sequence[Sample]) -> dict[str, int]:
    counts = {cls.name: 0 for cls in CLASS_ORDER}
    for sample in samples:
        if sample.label is not None:
            counts[sample.label.name] += 1
    return counts


@dataclass
class Normalizer:
    """Per-band z-score statistics, fitted on the training subset only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Normalizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean=mean, std=std)

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std
