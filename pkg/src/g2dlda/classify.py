"""Projection C = W^T X and 1-nearest-neighbour classification under the Frobenius metric."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .solver import ProjectionModel

_CHUNK_ELEMENTS = 1 << 23


@dataclass(frozen=True, eq=False)
class ProjectedSample:
    features: np.ndarray
    label: int


def project(X, model: ProjectionModel, dims=None):
    """First ``dims`` rows of W^T X.  Accepts one (d1, d2) matrix or a stack (N, d1, d2)."""
    X = np.asarray(X, dtype=np.float64)
    dims = model.r1 if dims is None else int(dims)
    if not 1 <= dims <= model.r1:
        raise ValueError(f"dims must lie in [1, {model.r1}], got {dims}")
    if X.ndim not in (2, 3) or X.shape[-2] != model.d1:
        raise ValueError(f"sample shape {X.shape[-2:]} does not match model with d1={model.d1}")
    Wt = model.W[:, :dims].T
    return Wt @ X


def _row_sq_distances(train, test):
    """Squared distances split by feature row: shape (n_test, n_train, r)."""
    diff = test[:, None, :, :] - train[None, :, :, :]
    return np.einsum("qnrk,qnrk->qnr", diff, diff)


def _cumulative_sq_distances(train, test):
    # prefix over rows k gives the distance for a model truncated to k dims
    return np.cumsum(_row_sq_distances(train, test), axis=2)


def nn_classify(train, test_features):
    """Label of the training sample nearest to ``test_features``; ties go to the lowest index."""
    if len(train) == 0:
        raise ValueError("empty training set")
    feats = np.stack([np.asarray(s.features, dtype=np.float64) for s in train])
    labels = np.array([s.label for s in train])
    test = np.asarray(test_features, dtype=np.float64)
    if test.shape != feats.shape[1:]:
        raise ValueError(f"test shape {test.shape} does not match training shape {feats.shape[1:]}")
    dist = _cumulative_sq_distances(feats, test[None])[0, :, -1]
    return int(labels[np.argmin(dist)])


def predict_sweep(model: ProjectionModel, train: Dataset, test: Dataset, dims=None):
    """Predictions for every truncation 1..dims at once: array (dims, n_test)."""
    dims = model.r1 if dims is None else int(dims)
    ftrain = project(train.X, model, dims)
    ftest = project(test.X, model, dims)
    per_query = max(1, ftrain.size)
    batch = max(1, _CHUNK_ELEMENTS // per_query)
    nearest = np.empty((dims, len(ftest)), dtype=np.int64)
    for start in range(0, len(ftest), batch):
        chunk = _cumulative_sq_distances(ftrain, ftest[start : start + batch])
        nearest[:, start : start + batch] = np.argmin(chunk, axis=1).T
    return train.labels[nearest]


def accuracy_sweep(model: ProjectionModel, train: Dataset, test: Dataset, dims=None):
    """Accuracy for each truncation 1..dims."""
    pred = predict_sweep(model, train, test, dims)
    return (pred == test.labels[None, :]).mean(axis=1)


def accuracy(model: ProjectionModel, train: Dataset, test: Dataset, dims):
    """Fraction of ``test`` classified correctly using the first ``dims`` directions."""
    return float(accuracy_sweep(model, train, test, dims)[-1])
