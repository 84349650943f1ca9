"""Discrete Fourier transform, power spectrum, analytic signal, instantaneous frequency.

The transform is computed by an in-package FFT: iterative radix-2 for
power-of-two lengths and Bluestein's chirp-z algorithm otherwise, so every
length gets O(N log N) treatment while matching the defining sum

    c_k = sum_n x_n exp(-i 2 pi k n / N)

to near machine precision (the naive sum is kept as a test oracle).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_REV_CACHE: dict = {}
_CHIRP_CACHE: dict = {}


def _bit_reversal(n: int) -> np.ndarray:
    perm = _REV_CACHE.get(n)
    if perm is None:
        bits = n.bit_length() - 1
        idx = np.arange(n)
        perm = np.zeros(n, dtype=np.intp)
        for _ in range(bits):
            perm = (perm << 1) | (idx & 1)
            idx >>= 1
        _REV_CACHE[n] = perm
    return perm


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT; len(x) must be a power of two."""
    n = len(x)
    if n == 1:
        return x.astype(complex)
    out = x[_bit_reversal(n)].astype(complex)
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(-1, size)
        even = blocks[:, :half]
        odd = blocks[:, half:] * twiddle
        out = np.concatenate([even + odd, even - odd], axis=1).reshape(-1)
        size *= 2
    return out


def _chirp(n: int):
    cached = _CHIRP_CACHE.get(n)
    if cached is None:
        m = 1 << (2 * n - 1).bit_length()
        k = np.arange(n)
        # reduce k^2 mod 2n before the complex exponential to keep full precision
        w = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
        b = np.zeros(m, dtype=complex)
        b[:n] = np.conj(w)
        b[m - n + 1:] = np.conj(w[1:][::-1])
        cached = (m, w, _fft_pow2(b))
        _CHIRP_CACHE[n] = cached
    return cached


def _fft(x: np.ndarray) -> np.ndarray:
    """FFT of an arbitrary-length 1-d array."""
    x = np.asarray(x, dtype=complex)
    n = len(x)
    if n == 0:
        raise DomainError("cannot transform an empty signal")
    if n & (n - 1) == 0:
        return _fft_pow2(x)
    m, w, fb = _chirp(n)
    a = np.zeros(m, dtype=complex)
    a[:n] = x * w
    conv = _ifft_pow2(_fft_pow2(a) * fb)
    return conv[:n] * w


def _ifft_pow2(x: np.ndarray) -> np.ndarray:
    return np.conj(_fft_pow2(np.conj(x))) / len(x)


def _ifft(x: np.ndarray) -> np.ndarray:
    return np.conj(_fft(np.conj(x))) / len(x)


@dataclass
class Spectrum:
    """DFT coefficients plus the power spectrum P_k = |c_k|^2 / N."""

    coefficients: np.ndarray
    power: np.ndarray
    sampling_rate: float

    def __len__(self) -> int:
        return len(self.coefficients)

    def frequencies_hz(self) -> np.ndarray:
        n = len(self.coefficients)
        return np.arange(n) * (self.sampling_rate / n)


def dft(signal, sampling_rate: float = 1.0) -> Spectrum:
    """Transform a real signal; power is |c_k|^2 / N."""
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise DomainError("dft requires a non-empty 1-d signal")
    coeffs = _fft(x)
    power = (coeffs.real ** 2 + coeffs.imag ** 2) / len(x)
    return Spectrum(coefficients=coeffs, power=power, sampling_rate=float(sampling_rate))


def inverse_dft(coefficients) -> np.ndarray:
    """Inverse transform; returns the complex time samples."""
    c = np.asarray(coefficients, dtype=complex)
    if c.ndim != 1 or len(c) == 0:
        raise DomainError("inverse_dft requires a non-empty 1-d spectrum")
    return _ifft(c)


def spectrum_peak(spec: Spectrum):
    """(peak power, peak frequency in Hz) over bins 0..N//2.

    Only sub-Nyquist bins are considered; ties break toward the lowest bin.
    """
    n = len(spec)
    if n < 2:
        raise DomainError("spectrum_peak needs at least 2 bins")
    half = spec.power[:n // 2 + 1]
    k = int(np.argmax(half))
    return float(half[k]), float(k * spec.sampling_rate / n)


def hilbert_analytic(signal) -> np.ndarray:
    """Analytic signal z = x + i*H(x) via the frequency-domain method.

    Negative frequencies are zeroed, positive ones doubled; DC and (for even
    length) the Nyquist bin are kept unscaled.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DomainError("hilbert_analytic needs at least 2 samples")
    n = len(x)
    spec = _fft(x)
    gain = np.zeros(n)
    gain[0] = 1.0
    if n % 2 == 0:
        gain[n // 2] = 1.0
        gain[1:n // 2] = 2.0
    else:
        gain[1:(n + 1) // 2] = 2.0
    return _ifft(spec * gain)


def mean_instantaneous_frequency(signal, sampling_rate: float) -> float:
    """Mean of Fs/(2 pi) * diff(unwrap(angle(analytic signal))) in Hz."""
    x = np.asarray(signal, dtype=float)
    if len(x) < 3:
        raise DomainError("instantaneous frequency needs at least 3 samples")
    if not np.any(x):
        raise DomainError("instantaneous frequency undefined for the all-zero signal")
    z = hilbert_analytic(x)
    phase = np.unwrap(np.angle(z))
    inst = np.diff(phase) * (sampling_rate / (2.0 * np.pi))
    return float(np.mean(inst))
