"""Synthetic two-class ECG populations with controllable high-frequency content.

Each record is a periodic P-QRS-T template of Gaussian bumps, plus band-limited
noise bursts gated to the QRS window (the high-frequency content that drives
class separation), plus optional white measurement noise, scaled per channel.
Generation is fully deterministic given the spec seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .signal_io import CHANNEL_NAMES, EcgRecord

# fixed per-channel gains applied to the common source signal
CHANNEL_GAINS = (0.65, 1.0, 0.8, 0.9, 1.0, 1.1, 1.05, 0.95)


@dataclass
class SynthSpec:
    """Knobs for one population class."""

    rate: int = 1028
    duration_s: float = 30.0
    heart_rate_bpm: float = 60.0
    p_amp: float = 0.12
    p_width_s: float = 0.025
    p_offset_s: float = -0.17
    qrs_amp: float = 1.0
    qrs_width_s: float = 0.012
    t_amp: float = 0.30
    t_width_s: float = 0.055
    t_offset_s: float = 0.30
    hf_bands: tuple = ()          # (center_hz, amplitude, bandwidth_hz) triples
    hf_gate_width_s: float = 0.05
    amp_jitter: float = 0.1       # per-subject relative spread of hf amplitudes
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rate <= 0 or self.duration_s <= 0 or self.heart_rate_bpm <= 0:
            raise DomainError("rate, duration and heart rate must be positive")
        for amp in (self.p_amp, self.qrs_amp, self.t_amp, self.noise_sigma):
            if amp < 0:
                raise DomainError("amplitudes must be >= 0")
        if not 0.0 <= self.amp_jitter < 1.0:
            raise DomainError("amp_jitter must be in [0, 1)")
        for band in self.hf_bands:
            center, amplitude, bandwidth = band
            if amplitude < 0 or bandwidth <= 0:
                raise DomainError(f"bad high-frequency band {band}")
            if self.rate <= 2 * center:
                raise DomainError(
                    f"band center {center} Hz needs a sampling rate above {2 * center}")

    @property
    def n_samples(self) -> int:
        return int(round(self.rate * self.duration_s))


def beat_centers(spec: SynthSpec) -> np.ndarray:
    """R-peak sample positions; spacing matches the heart rate within a sample."""
    period_s = 60.0 / spec.heart_rate_bpm
    times = []
    t = 0.5 * period_s
    while t < spec.duration_s:
        times.append(t)
        t += period_s
    return np.round(np.array(times) * spec.rate).astype(int)


def beat_template(spec: SynthSpec) -> np.ndarray:
    """Clean periodic P-QRS-T trace of Gaussian bumps."""
    n = spec.n_samples
    t = np.arange(n) / spec.rate
    signal = np.zeros(n)
    for center in beat_centers(spec) / spec.rate:
        for amp, width, offset in ((spec.p_amp, spec.p_width_s, spec.p_offset_s),
                                   (spec.qrs_amp, spec.qrs_width_s, 0.0),
                                   (spec.t_amp, spec.t_width_s, spec.t_offset_s)):
            if amp > 0:
                signal += amp * np.exp(-0.5 * ((t - center - offset) / width) ** 2)
    return signal


def qrs_gate(spec: SynthSpec) -> np.ndarray:
    """Smooth 0..1 gate around each QRS complex."""
    n = spec.n_samples
    t = np.arange(n) / spec.rate
    gate = np.zeros(n)
    for center in beat_centers(spec) / spec.rate:
        gate += np.exp(-0.5 * ((t - center) / spec.hf_gate_width_s) ** 2)
    return np.clip(gate, 0.0, 1.0)


def band_noise(rng: np.random.Generator, n: int, rate: float,
               center_hz: float, bandwidth_hz: float) -> np.ndarray:
    """Unit-RMS Gaussian noise band-limited to center +- bandwidth/2."""
    freqs = np.fft.rfftfreq(n, d=1.0 / rate)
    keep = (freqs >= center_hz - bandwidth_hz / 2.0) & (freqs <= center_hz + bandwidth_hz / 2.0)
    if not np.any(keep):
        raise DomainError(
            f"band {center_hz}+-{bandwidth_hz / 2} Hz contains no DFT bins at {rate} Hz/{n}")
    spec = np.fft.rfft(rng.standard_normal(n))
    spec[~keep] = 0.0
    x = np.fft.irfft(spec, n)
    rms = float(np.sqrt(np.mean(x * x)))
    return x / rms


def hf_component(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """QRS-gated sum of the spec's band-limited noise bursts."""
    n = spec.n_samples
    out = np.zeros(n)
    if not spec.hf_bands:
        return out
    jitter = rng.uniform(1.0 - spec.amp_jitter, 1.0 + spec.amp_jitter)
    gate = qrs_gate(spec)
    for center, amplitude, bandwidth in spec.hf_bands:
        if amplitude > 0:
            out += amplitude * jitter * band_noise(rng, n, spec.rate, center, bandwidth) * gate
    return out


def synth_record(spec: SynthSpec, subject_id: str, group_label: str) -> EcgRecord:
    """One deterministic 8-channel record for the given spec."""
    rng = np.random.default_rng(spec.seed)
    base = beat_template(spec) + hf_component(spec, rng)
    channels = {}
    for name, gain in zip(CHANNEL_NAMES, CHANNEL_GAINS):
        channel = gain * base
        if spec.noise_sigma > 0:
            channel = channel + spec.noise_sigma * rng.standard_normal(spec.n_samples)
        channels[name] = channel
    return EcgRecord(channels=channels, sampling_rate=spec.rate,
                     subject_id=subject_id, group_label=group_label)


def generate_population(spec_class1: SynthSpec, spec_class2: SynthSpec,
                        subjects_per_class) -> list:
    """Labelled records for both classes.

    ``subjects_per_class`` is an int applied to both classes or an
    (n_class1, n_class2) pair. Subject i of a class uses seed spec.seed + i.
    """
    if isinstance(subjects_per_class, int):
        n1 = n2 = subjects_per_class
    else:
        n1, n2 = subjects_per_class
    if n1 < 1 or n2 < 1:
        raise DomainError("each class needs at least one subject")
    records = []
    for i in range(n1):
        spec = replace(spec_class1, seed=spec_class1.seed + i)
        records.append(synth_record(spec, f"h{i + 1:02d}", "healthy"))
    for i in range(n2):
        spec = replace(spec_class2, seed=spec_class2.seed + i)
        records.append(synth_record(spec, f"s{i + 1:02d}", "sick"))
    return records
