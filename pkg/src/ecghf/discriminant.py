"""Scatter-matrix discriminant reduction of the feature space.

Within-class and between-class scatter are estimated from labelled feature
vectors; the reduction directions are the leading eigenvectors of
Sw^-1 Sb, found by a symmetric generalized eigensolve (Cholesky whitening)
and cross-checked against power iteration on the dominant pair. For two
classes Sb has rank one, so exactly one eigenvalue carries information and
the reduced space is one-dimensional.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DomainError, NumericalError

CLASS_LABELS = ("healthy", "sick")

_RIDGE_EPS = 1e-10
_COND_LIMIT = 1e12
_LAMBDA_AGREEMENT = 1e-8


@dataclass
class ScatterModel:
    """Per-class estimates and the within/between scatter matrices."""

    class_labels: tuple
    class_means: np.ndarray        # (c, n)
    class_covariances: np.ndarray  # (c, n, n)
    priors: np.ndarray             # (c,)
    sample_counts: np.ndarray      # (c,)
    mixture_mean: np.ndarray       # (n,)
    within_scatter: np.ndarray     # (n, n)
    between_scatter: np.ndarray    # (n, n)

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    @property
    def dimension(self) -> int:
        return self.class_means.shape[1]


@dataclass
class ReductionModel:
    """Eigen-structure of Sw^-1 Sb and the projection onto the top-m directions."""

    eigenvalues: np.ndarray    # (n,), descending
    eigenvectors: np.ndarray   # (n, n), unit columns
    projection: np.ndarray     # (n, m), the first m eigenvector columns
    retained: int
    saved_information: float   # percentage of sum(eigenvalues) kept
    within_scatter: np.ndarray  # the (possibly ridge-regularised) matrix inverted
    ridge: float


def fit_scatter(feature_vectors) -> ScatterModel:
    """Estimate scatter matrices from labelled :class:`FeatureVector` items."""
    vectors = list(feature_vectors)
    if not vectors:
        raise DomainError("cannot fit scatter matrices on an empty feature set")
    X = np.array([fv.values for fv in vectors], dtype=float)
    labels = [fv.group_label for fv in vectors]
    for fv in vectors:
        if not np.all(np.isfinite(fv.values)):
            raise DataFormatError(
                f"non-finite feature for {fv.subject_id}/{fv.lead_name}/{fv.fragment_index}")
    return fit_scatter_arrays(X, labels)


def fit_scatter_arrays(X, labels, class_order=None) -> ScatterModel:
    """Scatter estimates from an (N, n) matrix and per-row labels."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DomainError("feature matrix must be 2-d and non-empty")
    if not np.all(np.isfinite(X)):
        row = int(np.where(~np.isfinite(X).all(axis=1))[0][0])
        raise DataFormatError(f"non-finite feature value in row {row}")
    labels = list(labels)
    if len(labels) != len(X):
        raise DomainError("labels must align with feature rows")
    if class_order is None:
        unique = sorted(set(labels))
        if set(unique) <= set(CLASS_LABELS):
            class_order = tuple(l for l in CLASS_LABELS if l in unique)
        else:
            class_order = tuple(unique)
    if len(class_order) < 2:
        raise DomainError(f"need at least 2 classes, got {class_order}")
    n = X.shape[1]
    c = len(class_order)
    means = np.zeros((c, n))
    covs = np.zeros((c, n, n))
    counts = np.zeros(c, dtype=int)
    for k, label in enumerate(class_order):
        members = X[[i for i, l in enumerate(labels) if l == label]]
        if len(members) < 2:
            raise DomainError(
                f"class {label!r} has {len(members)} samples, needs at least 2")
        counts[k] = len(members)
        means[k] = members.mean(axis=0)
        centered = members - means[k]
        covs[k] = centered.T @ centered / len(members)
    priors = counts / counts.sum()
    mixture_mean = priors @ means
    within = np.einsum("k,kij->ij", priors, covs)
    offsets = means - mixture_mean
    between = np.einsum("k,ki,kj->ij", priors, offsets, offsets)
    within = (within + within.T) / 2.0
    between = (between + between.T) / 2.0
    return ScatterModel(class_labels=tuple(class_order), class_means=means,
                        class_covariances=covs, priors=priors, sample_counts=counts,
                        mixture_mean=mixture_mean, within_scatter=within,
                        between_scatter=between)


def regularize_spd(matrix: np.ndarray):
    """Ridge a near-singular symmetric PSD matrix; returns (matrix, ridge).

    A ridge of 1e-10 * mean(diag) is added when the condition estimate
    exceeds 1e12; a NumericalError reports the condition estimate if the
    matrix stays effectively singular.
    """
    matrix = np.asarray(matrix, dtype=float)
    cond = np.linalg.cond(matrix)
    ridge = 0.0
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        ridge = _RIDGE_EPS * float(np.mean(np.diag(matrix)))
        if ridge > 0.0:
            matrix = matrix + ridge * np.eye(len(matrix))
            cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise NumericalError(
            f"matrix singular beyond regularization (condition estimate {cond:.3e})")
    return matrix, ridge


def _whitened_eigh(s_w: np.ndarray, s_b: np.ndarray):
    """Eigenpairs of Sw^-1 Sb via Cholesky whitening, descending."""
    try:
        chol = np.linalg.cholesky(s_w)
    except np.linalg.LinAlgError:
        raise NumericalError("within-class scatter is not positive definite") from None
    half = np.linalg.solve(chol, s_b)
    white = np.linalg.solve(chol, half.T).T
    white = (white + white.T) / 2.0
    eigvals, eigvecs_white = np.linalg.eigh(white)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    vectors = np.linalg.solve(chol.T, eigvecs_white[:, order])
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    return eigvals, vectors


def _power_iteration_lambda(s_w_reg: np.ndarray, s_b: np.ndarray,
                            start: np.ndarray, iterations: int = 200) -> float:
    x = start / np.linalg.norm(start)
    value = 0.0
    for _ in range(iterations):
        y = np.linalg.solve(s_w_reg, s_b @ x)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        y = y / norm
        new_value = float((y @ s_b @ y) / (y @ s_w_reg @ y))
        if abs(new_value - value) <= 1e-15 * max(1.0, abs(new_value)):
            return new_value
        value = new_value
        x = y
    return value


def reduce(model: ScatterModel, m="auto") -> ReductionModel:
    """Eigen-analysis of Sw^-1 Sb and the top-m projection.

    ``m="auto"`` keeps the smallest m whose saved information reaches 85%.
    The dominant eigenvalue from the whitened eigensolve must agree with an
    independent power iteration to 1e-8 relative.
    """
    s_w, ridge = regularize_spd(model.within_scatter)
    s_b = model.between_scatter
    eigvals, eigvecs = _whitened_eigh(s_w, s_b)
    if np.linalg.norm(s_b) > 0.0 and eigvals[0] > 0.0:
        start = (model.class_means[0] - model.class_means[1]
                 if model.class_count == 2 else np.ones(model.dimension))
        lam_pi = _power_iteration_lambda(s_w, s_b, start)
        if abs(lam_pi - eigvals[0]) > _LAMBDA_AGREEMENT * abs(eigvals[0]):
            raise NumericalError(
                f"power iteration ({lam_pi!r}) and eigensolve ({eigvals[0]!r}) "
                f"disagree on the dominant eigenvalue")
    total = float(eigvals.sum())
    if total <= 0.0:
        raise DomainError("no between-class separation: eigenvalue sum is not positive")
    # deterministic signs: class-1 mean side for the leading vector, largest
    # component positive for the rest
    if model.class_count == 2:
        direction = model.class_means[0] - model.class_means[1]
        if eigvecs[:, 0] @ direction < 0.0:
            eigvecs[:, 0] = -eigvecs[:, 0]
    for i in range(1 if model.class_count == 2 else 0, eigvecs.shape[1]):
        j = int(np.argmax(np.abs(eigvecs[:, i])))
        if eigvecs[j, i] < 0.0:
            eigvecs[:, i] = -eigvecs[:, i]
    cumulative = np.cumsum(eigvals) / total * 100.0
    if m == "auto":
        retained = int(np.argmax(cumulative >= 85.0)) + 1
    else:
        retained = int(m)
        if not 1 <= retained <= len(eigvals):
            raise DomainError(f"retained dimension must be in [1, {len(eigvals)}], got {m}")
    saved = float(cumulative[retained - 1])
    return ReductionModel(eigenvalues=eigvals, eigenvectors=eigvecs,
                          projection=eigvecs[:, :retained].copy(), retained=retained,
                          saved_information=saved, within_scatter=s_w, ridge=ridge)


def project(reduction: ReductionModel, Y):
    """Z = A^T Y for a single feature vector or a stack of them."""
    Y = np.asarray(Y, dtype=float)
    n = reduction.projection.shape[0]
    if Y.shape[-1] != n:
        raise DomainError(f"expected feature dimension {n}, got {Y.shape[-1]}")
    return Y @ reduction.projection


def j1_criterion(model: ScatterModel) -> float:
    """Separability criterion tr(Sw^-1 Sb), equal to the eigenvalue sum."""
    s_w, _ = regularize_spd(model.within_scatter)
    return float(np.trace(np.linalg.solve(s_w, model.between_scatter)))
