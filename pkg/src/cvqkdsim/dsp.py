"""Deterministic signal-processing primitives for the transceiver chain.

Amplitudes are carried in root-photon units throughout: the mean square
|x|^2 of a transmitted complex symbol equals its mean photon number.
Complex signals are processed as two independent real rails through
real-tapped filters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as _sig


@dataclass(frozen=True)
class SampledSignal:
    """A discrete-time signal together with its samples-per-symbol rate."""

    samples: np.ndarray
    sps: int = 4

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if not np.iscomplexobj(samples):
            samples = samples.astype(float, copy=False)
        object.__setattr__(self, "samples", samples)
        if self.sps < 1:
            raise ValueError(f"sps must be >= 1, got {self.sps}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("signal contains non-finite samples")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FirFilter:
    """Real FIR tap vector with a free-form role label.

    When ``normalized`` is set the taps carry unit energy (sum of squares 1).
    """

    taps: np.ndarray
    label: str = ""
    normalized: bool = False

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("taps must be a non-empty 1-D vector")
        if not np.all(np.isfinite(taps)):
            raise ValueError("taps contain non-finite values")
        if self.normalized and abs(self.energy - 1.0) > 1e-12:
            raise ValueError("normalized filter must have unit energy")

    @property
    def energy(self) -> float:
        return float(np.sum(self.taps**2))

    def __len__(self) -> int:
        return len(self.taps)

    def unit_energy(self, label: str | None = None) -> "FirFilter":
        """Return a copy rescaled to unit energy."""
        norm = float(np.sqrt(np.sum(self.taps**2)))
        if norm <= 0:
            raise ValueError("cannot normalize an all-zero filter")
        return FirFilter(self.taps / norm, label if label is not None else self.label,
                         normalized=True)


@dataclass(frozen=True)
class ComplexSymbolBlock:
    """A block of complex symbols with the per-symbol mean-square target."""

    symbols: np.ndarray
    variance_target: float | None = None

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=complex)
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def mean_power(self) -> float:
        """Empirical mean |x|^2 of the block."""
        return float(np.mean(np.abs(self.symbols) ** 2))


def generate_symbols(count: int, mean_photon: float, seed: int) -> ComplexSymbolBlock:
    """Draw i.i.d. circularly-symmetric complex Gaussian symbols.

    Each real quadrature has variance ``mean_photon / 2`` so that
    E[|x|^2] = mean_photon. Deterministic for a fixed seed.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if mean_photon <= 0:
        raise ValueError(f"mean_photon must be positive, got {mean_photon}")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(mean_photon / 2.0)
    sym = rng.normal(0.0, scale, count) + 1j * rng.normal(0.0, scale, count)
    return ComplexSymbolBlock(sym, variance_target=float(mean_photon))


def upsample(block: ComplexSymbolBlock, sps: int) -> SampledSignal:
    """Zero-stuff a symbol block to ``sps`` samples per symbol."""
    if sps < 1:
        raise ValueError(f"sps must be >= 1, got {sps}")
    out = np.zeros(len(block) * sps, dtype=complex)
    out[::sps] = block.symbols
    return SampledSignal(out, sps=sps)


def convolve(sig: SampledSignal, fir: FirFilter) -> SampledSignal:
    """Full linear convolution of a signal with an FIR filter."""
    if len(sig) == 0:
        return SampledSignal(np.zeros(0, dtype=complex), sps=sig.sps)
    out = _sig.convolve(sig.samples, fir.taps, mode="full", method="auto")
    return SampledSignal(out, sps=sig.sps)


def downsample(sig: SampledSignal, sps: int, phase: int = 0) -> ComplexSymbolBlock:
    """Pick every ``sps``-th sample starting at ``phase``."""
    if not 0 <= phase < sps:
        raise ValueError(f"phase must be in [0, sps), got phase={phase} sps={sps}")
    return ComplexSymbolBlock(np.asarray(sig.samples)[phase::sps])


def rrc_filter(rolloff: float, span_symbols: int, sps: int = 4) -> FirFilter:
    """Unit-energy root-raised-cosine taps, length span_symbols*sps + 1.

    Uses the standard time-domain closed form; the removable singularities
    at t = 0 and |t| = 1/(4*rolloff) are replaced by their analytic limits.
    """
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    if span_symbols < 1:
        raise ValueError(f"span_symbols must be >= 1, got {span_symbols}")
    n = span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2.0) / sps  # in symbol durations
    h = np.empty(n)
    at_zero = np.isclose(t, 0.0, atol=1e-12)
    at_sing = np.isclose(np.abs(t), 1.0 / (4.0 * rolloff), atol=1e-9)
    h[at_zero] = 1.0 - rolloff + 4.0 * rolloff / np.pi
    h[at_sing] = (rolloff / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * rolloff))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * rolloff))
    )
    rest = ~(at_zero | at_sing)
    tr = t[rest]
    num = np.sin(np.pi * tr * (1.0 - rolloff)) + 4.0 * rolloff * tr * np.cos(
        np.pi * tr * (1.0 + rolloff)
    )
    den = np.pi * tr * (1.0 - (4.0 * rolloff * tr) ** 2)
    h[rest] = num / den
    h /= np.sqrt(np.sum(h**2))
    return FirFilter(h, label="tx-shaper", normalized=True)


def truncate_taps(fir: FirFilter, num_taps: int, label: str | None = None) -> FirFilter:
    """Keep the central ``num_taps`` taps and renormalize to unit energy."""
    if not 1 <= num_taps <= len(fir):
        raise ValueError(f"num_taps must be in [1, {len(fir)}], got {num_taps}")
    start = (len(fir) - num_taps) // 2
    return FirFilter(fir.taps[start:start + num_taps]).unit_energy(
        label if label is not None else fir.label)


def truncated_rrc(num_taps: int, rolloff: float = 0.2, sps: int = 4,
                  label: str = "") -> FirFilter:
    """Central ``num_taps``-tap truncation of a long RRC prototype.

    The prototype spans at least 250 symbols so that short truncations are
    cuts of one canonical filter rather than separately designed ones.
    """
    span = max(250, int(np.ceil(num_taps / sps)) + 2)
    return truncate_taps(rrc_filter(rolloff, span, sps), num_taps, label=label)


def super_gaussian_lpf(order: int = 4, bandwidth_norm: float = 0.75,
                       num_taps: int = 257, sps: int = 4) -> FirFilter:
    """Linear-phase FIR realization of a super-Gaussian low-pass response.

    Target magnitude |H(f)| = exp(-(ln 2 / 2) * (f / f3dB)^(2*order)) with
    f3dB = bandwidth_norm in units of the symbol rate, realized by frequency
    sampling, inverse transform and symmetric truncation. The peak is
    normalized to 1 at DC, so |H(f3dB)|^2 = 1/2 up to truncation error.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if bandwidth_norm <= 0:
        raise ValueError(f"bandwidth_norm must be positive, got {bandwidth_norm}")
    if num_taps % 2 == 0:
        raise ValueError("num_taps must be odd for a symmetric linear-phase FIR")
    grid = 1 << max(12, int(np.ceil(np.log2(8 * num_taps))))
    f = np.fft.fftfreq(grid, d=1.0 / sps)  # cycles per symbol duration
    mag = np.exp(-(np.log(2.0) / 2.0) * np.abs(f / bandwidth_norm) ** (2 * order))
    h = np.fft.ifft(mag).real
    h = np.roll(h, grid // 2)
    half = (num_taps - 1) // 2
    taps = h[grid // 2 - half: grid // 2 + half + 1]
    taps = taps / np.sum(taps)  # unit DC gain
    return FirFilter(taps, label="lpf")


def frequency_response(fir: FirFilter, freqs_norm: np.ndarray, sps: int) -> np.ndarray:
    """Complex response of the filter at frequencies in units of the symbol rate."""
    freqs_norm = np.atleast_1d(np.asarray(freqs_norm, dtype=float))
    n = np.arange(len(fir))
    # discrete-time frequency: f_norm cycles/symbol -> f_norm / sps cycles/sample
    phases = -2j * np.pi * np.outer(freqs_norm / sps, n)
    return np.exp(phases) @ fir.taps
