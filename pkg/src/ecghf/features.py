"""Per-component statistics and the 21-dimensional feature vector.

For each high-frequency component RecD1..RecD4 of a 4-level decomposition the
vector holds [max_abs, l2_energy, peak_power, peak_freq_hz, entropy], followed
by the rescaled-range trend exponent of RecD4 only; the order below is frozen
and hashed into persisted models.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DomainError
from .signal_io import Fragment, atomic_write_text
from .spectral import dft, mean_instantaneous_frequency, spectrum_peak
from .wavelet import DecompositionTree, WaveletBank, reconstruct_component, wavedec

FEATURE_COMPONENT_COUNT = 4

FEATURE_NAMES = tuple(
    f"d{s}_{stat}"
    for s in range(1, FEATURE_COMPONENT_COUNT + 1)
    for stat in ("max_abs", "l2_energy", "peak_power", "peak_freq_hz", "entropy")
) + ("d4_hurst",)

EXTENDED_FEATURE_NAMES = tuple(
    f"d{s}_{stat}"
    for s in range(1, FEATURE_COMPONENT_COUNT + 1)
    for stat in ("dispersion", "l1_energy", "relative_l2", "mean_inst_freq_hz")
) + ("d1_hurst", "d2_hurst", "d3_hurst")

_IDENTITY_COLUMNS = ("subject_id", "lead", "fragment_index", "label")


def feature_order_hash() -> str:
    """SHA-256 of the frozen feature-name order; stored in model files."""
    return hashlib.sha256(",".join(FEATURE_NAMES).encode()).hexdigest()


def l1_energy(x) -> float:
    """Sum of absolute sample values."""
    x = _nonempty(x)
    return float(np.sum(np.abs(x)))


def l2_energy(x) -> float:
    """Sum of squared sample values."""
    x = _nonempty(x)
    return float(np.sum(x * x))


def relative_l2(x, whole) -> float:
    """Component energy as a fraction of whole-signal energy."""
    total = l2_energy(whole)
    if total == 0.0:
        raise DomainError("relative energy undefined: whole signal has zero energy")
    return l2_energy(x) / total


def shannon_entropy(x) -> float:
    """-sum(x^2 ln x^2) with the 0*ln(0) = 0 convention; not normalised."""
    x = _nonempty(x)
    p = x * x
    terms = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return float(-np.sum(terms))


def hurst_rs(x) -> float:
    """Trend exponent from the single-window rescaled range, R/S = (N/2)^H.

    R is the range of the cumulative demeaned sums, S the standard deviation
    about the sample mean.
    """
    x = _nonempty(x)
    n = len(x)
    if n < 16:
        raise DomainError(f"rescaled-range estimate needs >= 16 samples, got {n}")
    deviations = np.cumsum(x - x.mean())
    spread = float(deviations.max() - deviations.min())
    scale = float(x.std())
    if scale == 0.0:
        raise DomainError("rescaled-range estimate undefined for a constant signal")
    h = float(np.log(spread / scale) / np.log(n / 2.0))
    if not 0.0 < h < 1.5:
        warnings.warn(f"trend exponent {h:.4f} outside the expected (0, 1.5) range",
                      stacklevel=2)
    return h


def dispersion(x) -> float:
    """Population variance (part of the extended feature menu)."""
    x = _nonempty(x)
    return float(x.var())


def _nonempty(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1 or len(a) == 0:
        raise DomainError("expected a non-empty 1-d sample sequence")
    return a


@dataclass
class FeatureVector:
    """The frozen 21 features for one lead fragment, plus its identity."""

    values: np.ndarray
    subject_id: str = ""
    lead_name: str = ""
    fragment_index: int = 0
    group_label: str = "unlabeled"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(FEATURE_NAMES),):
            raise DomainError(
                f"feature vector must have exactly {len(FEATURE_NAMES)} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = FEATURE_NAMES[int(np.where(~np.isfinite(v))[0][0])]
            raise DomainError(f"non-finite feature {bad} for "
                              f"{self.subject_id}/{self.lead_name}/{self.fragment_index}")
        self.values = v

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.values))


def _components(fragment: Fragment, tree: DecompositionTree, bank: WaveletBank):
    if tree.levels != FEATURE_COMPONENT_COUNT:
        raise DomainError(
            f"feature extraction expects a {FEATURE_COMPONENT_COUNT}-level tree, "
            f"got {tree.levels}")
    if tree.original_length != len(fragment.samples):
        raise DomainError("decomposition tree does not match the fragment length")
    return [reconstruct_component(tree, f"D{s}", bank)
            for s in range(1, FEATURE_COMPONENT_COUNT + 1)]


def extract_features(fragment: Fragment, tree: DecompositionTree,
                     bank: WaveletBank) -> FeatureVector:
    """Assemble the 21 features for one fragment from its decomposition."""
    values = []
    components = _components(fragment, tree, bank)
    for comp in components:
        spec = dft(comp, fragment.sampling_rate)
        peak_power, peak_freq = spectrum_peak(spec)
        values += [float(np.max(np.abs(comp))), l2_energy(comp),
                   peak_power, peak_freq, shannon_entropy(comp)]
    values.append(hurst_rs(components[-1]))
    return FeatureVector(values=np.array(values), subject_id=fragment.subject_id,
                         lead_name=fragment.lead_name,
                         fragment_index=fragment.fragment_index,
                         group_label=fragment.group_label)


def extract_extended_features(fragment: Fragment, tree: DecompositionTree,
                              bank: WaveletBank) -> dict:
    """The remaining menu statistics, excluded from classification."""
    components = _components(fragment, tree, bank)
    out = {}
    for s, comp in enumerate(components, start=1):
        out[f"d{s}_dispersion"] = dispersion(comp)
        out[f"d{s}_l1_energy"] = l1_energy(comp)
        out[f"d{s}_relative_l2"] = relative_l2(comp, fragment.samples)
        out[f"d{s}_mean_inst_freq_hz"] = mean_instantaneous_frequency(
            comp, fragment.sampling_rate)
    for s in range(1, FEATURE_COMPONENT_COUNT):
        out[f"d{s}_hurst"] = hurst_rs(components[s - 1])
    return out


def fragment_features(fragment: Fragment, bank: WaveletBank,
                      mode: str = "symmetric", extended: bool = False):
    """Decompose one fragment and extract its features.

    Returns the FeatureVector, or (FeatureVector, extended dict) when
    ``extended`` is set.
    """
    tree = wavedec(fragment.samples, FEATURE_COMPONENT_COUNT, bank, mode)
    fv = extract_features(fragment, tree, bank)
    if extended:
        return fv, extract_extended_features(fragment, tree, bank)
    return fv


def write_feature_table(path, vectors, extras=None, metadata=None) -> None:
    """Feature table CSV: identity and label columns plus the 21 features.

    ``extras`` optionally appends extended-feature columns; ``metadata``
    key/value pairs are recorded as leading comment lines.
    """
    if extras is not None and len(extras) != len(vectors):
        raise DomainError("extras must align with the feature vectors")
    lines = [f"# {k}={v}" for k, v in (metadata or {}).items()]
    extra_names = list(EXTENDED_FEATURE_NAMES) if extras else []
    lines.append(",".join(_IDENTITY_COLUMNS + FEATURE_NAMES + tuple(extra_names)))
    for i, fv in enumerate(vectors):
        cells = [fv.subject_id, fv.lead_name, str(fv.fragment_index), fv.group_label]
        cells += [repr(float(v)) for v in fv.values]
        if extras:
            cells += [repr(float(extras[i][name])) for name in extra_names]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_feature_table(path):
    """Parse a feature table; returns (vectors, metadata dict).

    Extended columns, when present, are tolerated and ignored.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    metadata = {}
    header = None
    vectors = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            metadata[key.strip()] = value.strip()
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            expected = list(_IDENTITY_COLUMNS + FEATURE_NAMES)
            if header[:len(expected)] != expected:
                raise DataFormatError(
                    f"feature table header mismatch at line {lineno}: "
                    f"expected columns {expected[:6]}...")
            continue
        if len(cells) != len(header):
            raise DataFormatError(
                f"feature table line {lineno}: expected {len(header)} cells, got {len(cells)}")
        try:
            values = [float(c) for c in cells[4:4 + len(FEATURE_NAMES)]]
            frag_idx = int(cells[2])
        except ValueError:
            raise DataFormatError(f"feature table line {lineno}: bad numeric cell") from None
        vectors.append(FeatureVector(values=np.array(values), subject_id=cells[0],
                                     lead_name=cells[1], fragment_index=frag_idx,
                                     group_label=cells[3]))
    if header is None:
        raise DataFormatError("feature table has no header row")
    return vectors, metadata
