"""Synthetic soil spectra for tests and benchmarks without the gated survey data.

Each class emits a fixed template (baseline + gentle slope + 2-3 Gaussian
absorption dips at class-specific positions) plus i.i.d. Gaussian noise.
At zero noise the classes are exactly separable by nearest template; the
default noise of 0.01 keeps them easily learnable. Compositions are drawn
near a class-typical point, jittered within the class region so the label
is consistent with the boundary table.
"""
from __future__ import annotations

import numpy as np

from .dataset import REDUCED_BANDS, Sample, SoilClass

# per class: baseline, slope, dips as (center, width, depth) on x in [0, 1]
_TEMPLATES = {
    SoilClass.L: (0.42, 0.05, ((0.30, 0.035, 0.10), (0.62, 0.050, 0.14))),
    SoilClass.S: (0.58, 0.08, ((0.45, 0.030, 0.12), (0.80, 0.045, 0.16))),
    SoilClass.T: (0.30, -0.04, ((0.22, 0.040, 0.12), (0.55, 0.035, 0.10), (0.88, 0.030, 0.12))),
    SoilClass.U: (0.47, 0.02, ((0.10, 0.030, 0.09), (0.70, 0.060, 0.15))),
}

# class-typical (clay, silt); sand is the remainder
_COMPOSITIONS = {
    SoilClass.L: (25.0, 40.0),
    SoilClass.S: (5.0, 20.0),
    SoilClass.T: (70.0, 15.0),
    SoilClass.U: (10.0, 78.0),
}


def class_template(cls: SoilClass, bands: int = REDUCED_BANDS) -> np.ndarray:
    """Noise-free reflectance template of a class."""
    baseline, slope, dips = _TEMPLATES[cls]
    x = np.linspace(0.0, 1.0, bands)
    spectrum = baseline + slope * x
    for center, width, depth in dips:
        spectrum = spectrum - depth * np.exp(-0.5 * ((x - center) / width) ** 2)
    return spectrum


def synth_generate(n_per_class: int, seed=0, bands: int = REDUCED_BANDS,
                   noise_sigma: float = 0.01) -> list[Sample]:
    """Deterministic labeled dataset: ``n_per_class`` spectra per class."""
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)
    samples = []
    for cls in SoilClass:
        template = class_template(cls, bands)
        clay0, silt0 = _COMPOSITIONS[cls]
        for i in range(n_per_class):
            spectrum = template + rng.normal(0.0, noise_sigma, size=bands)
            clay = clay0 + rng.uniform(-2.0, 2.0)
            silt = silt0 + rng.uniform(-2.0, 2.0)
            samples.append(Sample(
                sample_id=f"syn-{cls.name}-{i:05d}",
                spectrum=spectrum,
                clay_pct=clay,
                silt_pct=silt,
                sand_pct=100.0 - clay - silt,
                label=cls,
            ))
    return samples
