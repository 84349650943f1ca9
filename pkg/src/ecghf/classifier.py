"""Closed-form two-class linear classifier on reduced features.

Training solves weights = pooled_cov^-1 (M2 - M1) and
intercept = -weights . (P1 M1 + P2 M2), then orients the pair so that the
healthy class scores positive (the criterion it optimises is invariant under
rescaling, so orientation is free). For a one-dimensional reduced space the
classifier collapses to the scalar form h(z) = z - threshold with
threshold = -intercept / weight.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .discriminant import CLASS_LABELS, ReductionModel, regularize_spd
from .errors import DataFormatError, DomainError, NumericalError
from .features import FEATURE_NAMES, feature_order_hash
from .signal_io import LEAD_ORDER, atomic_write_text

MODEL_FORMAT = "ecghf-model"
MODEL_VERSION = 1


@dataclass
class ClassifierModel:
    """Trained weights, threshold and per-class score statistics."""

    weights: np.ndarray          # (m,)
    intercept: float
    threshold: float | None      # -intercept/weight when m == 1
    score_means: np.ndarray      # (2,) expected h per class
    score_variances: np.ndarray  # (2,)
    priors: np.ndarray           # (2,)
    criterion: float             # separation criterion at the trained weights
    class_labels: tuple = CLASS_LABELS
    reduction: ReductionModel | None = None

    @property
    def dimension(self) -> int:
        return len(self.weights)


@dataclass
class Decision:
    """Classifier output for one reduced sample."""

    lead_name: str
    z: float           # scalar reduced feature (NaN when the model is not 1-d)
    h: float
    label: str
    subject_id: str = ""
    fragment_index: int = 0


@dataclass
class PatientSummary:
    subject_id: str
    mean_h: float
    label: str
    problem_leads: tuple
    lead_mean_h: dict


@dataclass
class EvaluationReport:
    counts: tuple            # samples per class
    misclassified: tuple     # errors per class
    rates: tuple             # error rates per class
    bin_edges: np.ndarray
    histogram_class1: np.ndarray
    histogram_class2: np.ndarray
    threshold: float | None


def separation_criterion(score_means, score_variances, priors) -> float:
    """(P1 e1^2 + P2 e2^2) / (P1 s1^2 + P2 s2^2)."""
    e = np.asarray(score_means, dtype=float)
    s = np.asarray(score_variances, dtype=float)
    p = np.asarray(priors, dtype=float)
    denom = float(p @ s)
    if denom <= 0.0:
        raise NumericalError("zero pooled score variance")
    return float(p @ (e * e)) / denom


def _split_classes(Z, labels):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.ndim != 2 or len(Z) == 0:
        raise DomainError("reduced samples must form a non-empty 1-d or 2-d array")
    labels = list(labels)
    if len(labels) != len(Z):
        raise DomainError("labels must align with the reduced samples")
    unknown = sorted(set(labels) - set(CLASS_LABELS))
    if unknown:
        raise DomainError(f"unknown class label {unknown[0]!r}; expected {CLASS_LABELS}")
    groups = [Z[[i for i, l in enumerate(labels) if l == label]]
              for label in CLASS_LABELS]
    return Z, groups


def train(Z, labels, priors=None, reduction: ReductionModel | None = None) -> ClassifierModel:
    """Fit the closed-form classifier on labelled reduced samples.

    ``priors`` defaults to the training proportions; pass a pair to override
    (e.g. (0.5, 0.5)).
    """
    Z, groups = _split_classes(Z, labels)
    for label, grp in zip(CLASS_LABELS, groups):
        if len(grp) < 2:
            raise DomainError(f"class {label!r} has {len(grp)} samples, needs at least 2")
    m = Z.shape[1]
    counts = np.array([len(g) for g in groups], dtype=float)
    if priors is None:
        p = counts / counts.sum()
    else:
        p = np.asarray(priors, dtype=float)
        if p.shape != (2,) or np.any(p <= 0.0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("priors must be two positive numbers summing to 1")
    means = np.array([g.mean(axis=0) for g in groups])
    covs = np.array([(g - mu).T @ (g - mu) / len(g) for g, mu in zip(groups, means)])
    pooled = p[0] * covs[0] + p[1] * covs[1]
    pooled, _ = regularize_spd(pooled.reshape(m, m))
    try:
        weights = np.linalg.solve(pooled, means[1] - means[0])
    except np.linalg.LinAlgError:
        raise NumericalError("pooled covariance is singular") from None
    intercept = float(-weights @ (p[0] * means[0] + p[1] * means[1]))
    score_means = means @ weights + intercept
    if score_means[0] < score_means[1]:
        # orient so the healthy class scores positive; the criterion is
        # invariant under this sign flip
        weights = -weights
        intercept = -intercept
        score_means = -score_means
    score_vars = np.array([float(weights @ cov @ weights) for cov in covs])
    criterion = separation_criterion(score_means, score_vars, p)
    threshold = None
    if m == 1:
        w = float(weights[0])
        if w == 0.0:
            raise NumericalError("degenerate classifier: zero weight")
        threshold = -intercept / w
    return ClassifierModel(weights=weights, intercept=intercept, threshold=threshold,
                           score_means=score_means, score_variances=score_vars,
                           priors=p, criterion=criterion, reduction=reduction)


def classify(model: ClassifierModel, Z, lead_name: str = "", subject_id: str = "",
             fragment_index: int = 0) -> Decision:
    """Label one reduced sample; h > 0 means healthy, ties go to sick.

    For a 1-d model the score is reported in the scalar form h = z - threshold
    (same sign as weights.z + intercept since the trained weight is positive).
    """
    Z = np.atleast_1d(np.asarray(Z, dtype=float))
    if Z.shape != (model.dimension,):
        raise DomainError(f"expected a {model.dimension}-vector, got shape {Z.shape}")
    if model.dimension == 1:
        z = float(Z[0])
        h = z - model.threshold
    else:
        z = float("nan")
        h = float(model.weights @ Z + model.intercept)
    label = model.class_labels[0] if h > 0.0 else model.class_labels[1]
    return Decision(lead_name=lead_name, z=z, h=h, label=label,
                    subject_id=subject_id, fragment_index=fragment_index)


def aggregate_patient(decisions) -> PatientSummary:
    """Average h over all of one subject's decisions and flag problem leads.

    A lead is problematic when the sign of its mean h disagrees with the
    majority sign across leads (ties resolved by the overall mean).
    """
    decisions = list(decisions)
    if not decisions:
        raise DomainError("cannot aggregate an empty decision list")
    subject = decisions[0].subject_id
    mean_h = float(np.mean([d.h for d in decisions]))
    label = CLASS_LABELS[0] if mean_h > 0.0 else CLASS_LABELS[1]
    by_lead: dict = {}
    for d in decisions:
        by_lead.setdefault(d.lead_name, []).append(d.h)
    lead_mean = {lead: float(np.mean(vals)) for lead, vals in by_lead.items()}
    signs = {lead: 1 if v > 0.0 else -1 for lead, v in lead_mean.items()}
    positive = sum(1 for s in signs.values() if s > 0)
    negative = len(signs) - positive
    if positive > negative:
        majority = 1
    elif negative > positive:
        majority = -1
    else:
        majority = 1 if mean_h > 0.0 else -1
    ordered = [lead for lead in LEAD_ORDER if lead in signs]
    ordered += [lead for lead in signs if lead not in LEAD_ORDER]
    problems = tuple(lead for lead in ordered if signs[lead] != majority)
    return PatientSummary(subject_id=subject, mean_h=mean_h, label=label,
                          problem_leads=problems, lead_mean_h=lead_mean)


def evaluate(model: ClassifierModel, Z, labels, bins: int = 20) -> EvaluationReport:
    """Per-class misclassification rates plus class histograms of the scores."""
    Z, groups = _split_classes(Z, labels)
    if bins < 1:
        raise DomainError(f"bin count must be >= 1, got {bins}")
    errors = []
    for k, grp in enumerate(groups):
        wrong = 0
        for row in grp:
            d = classify(model, row)
            wrong += d.label != CLASS_LABELS[k]
        errors.append(wrong)
    counts = tuple(len(g) for g in groups)
    rates = tuple(err / cnt if cnt else 0.0 for err, cnt in zip(errors, counts))
    if model.dimension == 1:
        values = [g[:, 0] for g in groups]
        lo = min(v.min() for v in values if len(v))
        hi = max(v.max() for v in values if len(v))
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
        hist1 = np.histogram(values[0], bins=edges)[0]
        hist2 = np.histogram(values[1], bins=edges)[0]
    else:
        edges = np.zeros(0)
        hist1 = np.zeros(0, dtype=int)
        hist2 = np.zeros(0, dtype=int)
    return EvaluationReport(counts=counts, misclassified=tuple(errors), rates=rates,
                            bin_edges=edges, histogram_class1=hist1,
                            histogram_class2=hist2, threshold=model.threshold)


def save_model(path, model: ClassifierModel, metadata=None) -> None:
    """Persist the model (with its reduction) as deterministic JSON."""
    if model.reduction is None:
        raise DomainError("model has no embedded reduction to persist")
    red = model.reduction
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "feature_names": list(FEATURE_NAMES),
        "feature_order_hash": feature_order_hash(),
        "class_labels": list(model.class_labels),
        "eigenvalues": [float(v) for v in red.eigenvalues],
        "reduction_vectors": [[float(v) for v in red.eigenvectors[:, i]]
                              for i in range(red.retained)],
        "retained_dimension": red.retained,
        "saved_information_percent": red.saved_information,
        "ridge": red.ridge,
        "weights": [float(v) for v in model.weights],
        "intercept": model.intercept,
        "threshold": model.threshold,
        "priors": [float(v) for v in model.priors],
        "score_means": [float(v) for v in model.score_means],
        "score_variances": [float(v) for v in model.score_variances],
        "criterion": model.criterion,
        "metadata": dict(metadata or {}),
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_model(path):
    """Load a persisted model; returns (ClassifierModel, metadata dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"model file is not valid JSON: {exc}") from None
    if doc.get("format") != MODEL_FORMAT:
        raise DataFormatError("not a model file")
    if doc.get("feature_order_hash") != feature_order_hash():
        raise DataFormatError("model was built with a different feature order")
    vectors = np.array(doc["reduction_vectors"], dtype=float).T  # (n, m)
    n, m = vectors.shape
    eigvals = np.array(doc["eigenvalues"], dtype=float)
    all_vectors = np.zeros((n, n))
    all_vectors[:, :m] = vectors
    reduction = ReductionModel(eigenvalues=eigvals, eigenvectors=all_vectors,
                               projection=vectors, retained=m,
                               saved_information=float(doc["saved_information_percent"]),
                               within_scatter=np.zeros((n, n)),
                               ridge=float(doc.get("ridge", 0.0)))
    threshold = doc["threshold"]
    model = ClassifierModel(
        weights=np.array(doc["weights"], dtype=float),
        intercept=float(doc["intercept"]),
        threshold=None if threshold is None else float(threshold),
        score_means=np.array(doc["score_means"], dtype=float),
        score_variances=np.array(doc["score_variances"], dtype=float),
        priors=np.array(doc["priors"], dtype=float),
        criterion=float(doc["criterion"]),
        class_labels=tuple(doc["class_labels"]),
        reduction=reduction,
    )
    return model, doc.get("metadata", {})
