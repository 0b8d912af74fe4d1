"""Soil texture classification from 1D hyperspectral reflectance spectra.

Hand-written 1D CNNs (five architectures), a CART random-forest baseline,
the band-reduction/dedup/labeling preprocessing pipeline, OA/AA/kappa
metrics, and a batch CLI. See README.md for usage.
"""

from .dataset import DatasetSplit, Normalizer, Sample, SoilClass, deduplicate, load_csv, reduce_bands, split, to_arrays
from .forest import Forest, ForestConfig, fit_forest, predict_forest
from .gradcheck import gradient_check
from .ka5 import BoundaryTable, assign_soil_class
from .metrics import average_accuracy, confusion, kappa, normalize_rows, overall_accuracy
from .models import NetworkSpec, build, param_count, trace_shapes
from .network import Network
from .optim import Adam
from .synthetic import synth_generate
from .training import TrainConfig, load_checkpoint, predict, save_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "BoundaryTable",
    "DatasetSplit",
    "Forest",
    "ForestConfig",
    "Network",
    "NetworkSpec",
    "Normalizer",
    "Sample",
    "SoilClass",
    "TrainConfig",
    "assign_soil_class",
    "average_accuracy",
    "build",
    "confusion",
    "deduplicate",
    "fit_forest",
    "gradient_check",
    "kappa",
    "load_checkpoint",
    "load_csv",
    "normalize_rows",
    "overall_accuracy",
    "param_count",
    "predict",
    "predict_forest",
    "reduce_bands",
    "save_checkpoint",
    "split",
    "synth_generate",
    "to_arrays",
    "trace_shapes",
    "train",
]
