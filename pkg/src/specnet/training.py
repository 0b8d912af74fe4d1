"""Mini-batch training loop, prediction, and network checkpoints.

One Adam step per batch on mean gradients (the final short batch is kept
and normalized by its true size). Epoch shuffles use per-epoch seeds
derived from the config seed, so a run is bit-reproducible single-threaded.
Fixed epoch counts only: no early stopping, no schedule, and validation
metrics never feed back into training.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from . import _binio
from .dataset import N_CLASSES, Normalizer, to_arrays
from .errors import CheckpointError, ShapeError
from .metrics import average_accuracy, confusion, kappa, overall_accuracy
from .models import ARCHITECTURE_NAMES, TRAIN_DEFAULTS, NetworkSpec, build
from .network import Network
from .optim import Adam


@dataclass
class TrainConfig:
    """Training settings; epochs/batch default to the architecture's table."""

    architecture: str
    epochs: int | None = None
    batch_size: int | None = None
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    normalize: bool = False

    def resolved(self) -> "TrainConfig":
        if self.architecture not in ARCHITECTURE_NAMES:
            raise ShapeError(
                f"unknown architecture {self.architecture!r}; expected one of {ARCHITECTURE_NAMES}"
            )
        epochs, batch = TRAIN_DEFAULTS[self.architecture]
        cfg = replace(
            self,
            epochs=self.epochs if self.epochs is not None else epochs,
            batch_size=self.batch_size if self.batch_size is not None else batch,
        )
        if cfg.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {cfg.epochs}")
        if cfg.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {cfg.batch_size}")
        return cfg


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_oa: float
    val_oa: float
    val_aa: float
    val_kappa: float


def train(spec: NetworkSpec, train_samples, val_samples, config: TrainConfig):
    """Train a fresh network; returns (network, per-epoch history).

    Training metrics are accumulated over the epoch's own batches (loss and
    accuracy measured before each update); validation metrics are computed
    after each epoch.
    """
    cfg = config.resolved()
    if spec.name != cfg.architecture:
        raise ShapeError(f"spec is {spec.name!r} but config says {cfg.architecture!r}")

    X_train, y_train = to_arrays(train_samples, require_labels=True)
    if X_train.shape[1] != spec.input_length:
        raise ShapeError(
            f"training spectra have {X_train.shape[1]} bands, network expects {spec.input_length}"
        )
    normalizer = Normalizer.fit(X_train) if cfg.normalize else None
    if normalizer is not None:
        X_train = normalizer.apply(X_train)

    X_val = y_val = None
    if len(val_samples):
        X_val, y_val = to_arrays(val_samples, require_labels=True)
        if X_val.shape[1] != spec.input_length:
            raise ShapeError(
                f"validation spectra have {X_val.shape[1]} bands, network expects {spec.input_length}"
            )
        if normalizer is not None:
            X_val = normalizer.apply(X_val)

    root = np.random.SeedSequence(cfg.seed)
    init_seq, shuffle_seq = root.spawn(2)
    network = Network.from_spec(spec, init_seq)
    adam = Adam(network.parameters(), lr=cfg.learning_rate, beta1=cfg.beta1,
                beta2=cfg.beta2, epsilon=cfg.epsilon)

    n = X_train.shape[0]
    X3 = X_train[:, None, :]
    eye = np.eye(spec.n_classes)
    history: list[EpochStats] = []
    for epoch, seq in enumerate(shuffle_seq.spawn(cfg.epochs)):
        perm = np.random.default_rng(seq).permutation(n)
        loss_sum = 0.0
        correct = 0
        for batch_no, start in enumerate(range(0, n, cfg.batch_size)):
            idx = perm[start:start + cfg.batch_size]
            targets = eye[y_train[idx]]
            loss, probs, _ = network.backprop(X3[idx], targets)
            if not np.isfinite(loss):
                raise ValueError(f"non-finite loss at epoch {epoch}, batch {batch_no}")
            adam.step(network.gradients())
            loss_sum += loss * idx.size
            correct += int((probs.argmax(axis=1) == y_train[idx]).sum())

        val_oa = val_aa = val_kappa = float("nan")
        if X_val is not None and X_val.shape[0]:
            _, pred = predict(network, X_val)
            cm = confusion(y_val, pred, spec.n_classes)
            val_oa = overall_accuracy(cm)
            val_aa = average_accuracy(cm)
            try:
                val_kappa = kappa(cm)
            except ShapeError:
                pass  # degenerate marginals; leave NaN
        history.append(EpochStats(
            epoch=epoch,
            train_loss=loss_sum / n,
            train_oa=correct / n,
            val_oa=val_oa,
            val_aa=val_aa,
            val_kappa=val_kappa,
        ))
    return network, history


def predict(network: Network, spectra):
    """Class probabilities and argmax labels for a batch of spectra.

    Accepts (n, bands) or (n, 1, bands); pure, so repeated calls agree.
    """
    X = np.asarray(spectra, dtype=np.float64)
    if X.ndim == 2:
        X = X[:, None, :]
    if X.ndim != 3:
        raise ShapeError(f"predict expects (n, bands) or (n, 1, bands), got {np.shape(spectra)}")
    probs = network.predict_proba(X)
    return probs, probs.argmax(axis=1)


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "train_loss", "train_oa", "val_oa", "val_aa", "val_kappa"])
        for row in history:
            writer.writerow([
                row.epoch,
                repr(row.train_loss),
                repr(row.train_oa),
                repr(row.val_oa),
                repr(row.val_aa),
                repr(row.val_kappa),
            ])


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(network: Network, path, run_id: str = "") -> None:
    """Bit-exact parameter snapshot (see _binio for the byte layout)."""
    w = _binio.BodyWriter()
    w.u32(_binio.FORMAT_VERSION)
    w.text(network.spec.name)
    w.text(run_id)
    w.u32(network.spec.input_length)
    w.u32(network.spec.n_classes)
    arrays = network.parameter_arrays()
    w.u32(len(arrays))
    for arr in arrays:
        w.u32(arr.ndim)
        for dim in arr.shape:
            w.u32(dim)
    for arr in arrays:
        w.f64_array(arr)
    _binio.write_blob(path, _binio.MAGIC_NETWORK, w)


def load_checkpoint(path, expected_architecture: str | None = None):
    """Rebuild the architecture and restore parameters; returns (network, run_id)."""
    r = _binio.read_blob(path, _binio.MAGIC_NETWORK)
    version = r.u32()
    if version != _binio.FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {_binio.FORMAT_VERSION}")
    name = r.text()
    run_id = r.text()
    if expected_architecture is not None and name != expected_architecture:
        raise CheckpointError(
            f"{path}: checkpoint holds {name!r}, not the requested {expected_architecture!r}"
        )
    input_length = r.u32()
    n_classes = r.u32()
    n_tensors = r.u32()
    shapes = []
    for _ in range(n_tensors):
        ndim = r.u32()
        shapes.append(tuple(r.u32() for _ in range(ndim)))
    try:
        spec = build(name, input_length=input_length, n_classes=n_classes)
    except ShapeError as err:
        raise CheckpointError(f"{path}: {err}") from None
    network = Network.from_spec(spec, seed=0)
    expected = [arr.shape for arr in network.parameter_arrays()]
    if shapes != expected:
        raise CheckpointError(
            f"{path}: parameter shape table does not match architecture {name!r}"
        )
    arrays = [r.f64_array(int(np.prod(s, dtype=np.int64))).reshape(s) for s in shapes]
    r.finish()
    network.set_parameter_arrays(arrays)
    return network, run_id
