"""Resampling, frame resizing and MFCC extraction.

The MFCC window arithmetic follows the pairing between an l-frame
ultrasound window and its audio span: a window of t = l/r seconds is
analysed with an FFT window of t/(l*2) seconds and a step of t/(l*4)
seconds, producing exactly 4*l feature rows per span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.fft
import scipy.signal

from .data_io import AudioSignal, RawUltrasoundSequence, UltrasoundParams
from .errors import EmptyDataError, ValidationError
from .fan import bilinear_sample


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def window_time(frames_per_window: int, frame_rate: float) -> float:
    """Duration in seconds of a window of `frames_per_window` ultrasound frames."""
    if frames_per_window < 1:
        raise ValidationError("frames_per_window must be >= 1")
    if frame_rate <= 0:
        raise ValidationError("frame_rate must be positive")
    return frames_per_window / frame_rate


@dataclass
class MfccConfig:
    """Mel-cepstrum settings.

    The default 30-column layout is 13 static cepstra, 13 deltas and 4
    band-averaged log-filterbank energies; `feature_dim` controls how
    many of those columns are emitted (cepstra first, then deltas, then
    band summaries). Pre-emphasis 0.97, a Hamming analysis window, 26
    mel filters and a 1e-10 log floor are conventional defaults.
    """

    num_coefficients: int = 13
    window_seconds: float = 5 / 24 / 10  # t/(l*2) for l=5 at 24 fps
    step_seconds: float = 5 / 24 / 20  # t/(l*4)
    num_mel_filters: int = 26
    fft_size: int | None = None  # next power of two >= window samples
    feature_dim: int = 30
    preemphasis: float = 0.97
    log_floor: float = 1e-10

    def __post_init__(self):
        if not 0 < self.step_seconds <= self.window_seconds:
            raise ValidationError("need 0 < step_seconds <= window_seconds")
        if self.num_coefficients > self.num_mel_filters:
            raise ValidationError("num_coefficients must not exceed num_mel_filters")
        if self.feature_dim < self.num_coefficients:
            raise ValidationError("feature_dim must be >= num_coefficients")
        extra = self.feature_dim - 2 * self.num_coefficients
        if extra > self.num_mel_filters:
            raise ValidationError("feature_dim implies more band summaries than mel filters")

    @classmethod
    def for_window(cls, frames_per_window: int, frame_rate: float, **overrides) -> "MfccConfig":
        """Derive window/step from the ultrasound window arithmetic."""
        t = window_time(frames_per_window, frame_rate)
        return cls(
            window_seconds=t / (frames_per_window * 2),
            step_seconds=t / (frames_per_window * 4),
            **overrides,
        )


def resample_audio(sig: AudioSignal, target_rate: float) -> AudioSignal:
    """Band-limited resampling; a same-rate call returns the samples unchanged."""
    if target_rate <= 0:
        raise ValidationError(f"target_rate must be positive, got {target_rate}")
    if len(sig.samples) == 0 or sig.sample_rate == target_rate:
        return AudioSignal(samples=sig.samples.copy(), sample_rate=float(target_rate))
    ratio = Fraction(target_rate / sig.sample_rate).limit_denominator(1 << 20)
    out = scipy.signal.resample_poly(sig.samples, ratio.numerator, ratio.denominator)
    return AudioSignal(samples=out, sample_rate=float(target_rate))


def resample_ultrasound(seq: RawUltrasoundSequence, target_fps: float) -> RawUltrasoundSequence:
    """Nearest-frame selection on the uniform target grid.

    No inter-frame blending: blending would smear tongue contours.
    Grid indices round half up.
    """
    if target_fps <= 0:
        raise ValidationError(f"target_fps must be positive, got {target_fps}")
    src_fps = seq.params.frame_rate
    n = seq.n_frames
    out_count = round_half_up(n * target_fps / src_fps)
    if out_count < 1:
        raise EmptyDataError(
            f"resampling {n} frames from {src_fps} to {target_fps} fps leaves no frames"
        )
    idx = np.minimum(
        np.floor(np.arange(out_count) * (src_fps / target_fps) + 0.5).astype(np.intp), n - 1
    )
    params = UltrasoundParams(
        frame_rate=float(target_fps),
        scan_lines=seq.params.scan_lines,
        echo_returns=seq.params.echo_returns,
        field_of_view=seq.params.field_of_view,
        hardware_offset_ms=seq.params.hardware_offset_ms,
        first_frame_time=seq.params.first_frame_time,
        extras=dict(seq.params.extras),
    )
    return RawUltrasoundSequence(params=params, frames=seq.frames[idx].copy())


def resize_frame(frame: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    """Bilinear resize with corner alignment; same-size input is returned as-is."""
    if out_height < 1 or out_width < 1:
        raise ValidationError("output dimensions must be >= 1")
    frame = np.asarray(frame)
    h, w = frame.shape
    if (h, w) == (out_height, out_width):
        return frame.copy()
    rows = (
        np.arange(out_height) * ((h - 1) / (out_height - 1))
        if out_height > 1
        else np.array([(h - 1) / 2.0])
    )
    cols = (
        np.arange(out_width) * ((w - 1) / (out_width - 1))
        if out_width > 1
        else np.array([(w - 1) / 2.0])
    )
    grid_r, grid_c = np.meshgrid(rows, cols, indexing="ij")
    out = bilinear_sample(frame, grid_r.ravel(), grid_c.ravel()).reshape(out_height, out_width)
    if np.issubdtype(frame.dtype, np.integer):
        # Rounding cannot leave [min, max] because interpolation is convex
        # and the bounds are integers; clip guards float round-off only.
        return np.clip(np.round(out), frame.min(), frame.max()).astype(frame.dtype)
    return out


def _mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(num_filters: int, fft_size: int, sample_rate: float) -> np.ndarray:
    """Triangular mel filters over the rfft bins, (num_filters, fft_size//2 + 1)."""
    points = _hz(np.linspace(_mel(0.0), _mel(sample_rate / 2.0), num_filters + 2))
    bins = np.floor((fft_size + 1) * points / sample_rate).astype(int)
    bank = np.zeros((num_filters, fft_size // 2 + 1))
    for m in range(num_filters):
        left, centre, right = bins[m], bins[m + 1], bins[m + 2]
        for k in range(left, centre):
            bank[m, k] = (k - left) / max(centre - left, 1)
        for k in range(centre, right):
            bank[m, k] = (right - k) / max(right - centre, 1)
    return bank


def _deltas(feat: np.ndarray, width: int = 2) -> np.ndarray:
    # Regression deltas with edge frames repeated.
    denom = 2 * sum(i * i for i in range(1, width + 1))
    padded = np.pad(feat, ((width, width), (0, 0)), mode="edge")
    out = np.zeros_like(feat)
    for i in range(1, width + 1):
        out += i * (padded[width + i : width + i + len(feat)] - padded[width - i : len(feat) + width - i])
    return out / denom


def mfcc_frame_count(n_samples: int, step_seconds: float, sample_rate: float) -> int:
    """Rows emitted for an n-sample signal: round(n / step), at least 1.

    Rounding (rather than ceil) pins a span of t seconds to exactly
    t/step rows even when the span's sample count carries +-1 sample of
    rounding from window extraction.
    """
    return max(1, round_half_up(n_samples / (step_seconds * sample_rate)))


def mfcc(sig: AudioSignal, cfg: MfccConfig) -> np.ndarray:
    """Mel-frequency cepstra, (frames, cfg.feature_dim) float64."""
    samples = np.asarray(sig.samples, dtype=np.float64)
    if len(samples) == 0:
        raise EmptyDataError("cannot compute MFCC of an empty signal")
    sr = sig.sample_rate

    win = max(2, round_half_up(cfg.window_seconds * sr))
    step_f = cfg.step_seconds * sr
    n_frames = mfcc_frame_count(len(samples), cfg.step_seconds, sr)

    emphasised = np.concatenate(([samples[0]], samples[1:] - cfg.preemphasis * samples[:-1]))
    starts = [round_half_up(k * step_f) for k in range(n_frames)]
    needed = starts[-1] + win
    if needed > len(emphasised):
        emphasised = np.pad(emphasised, (0, needed - len(emphasised)))

    fft_size = cfg.fft_size or 2 ** math.ceil(math.log2(win))
    window = np.hamming(win)
    frames = np.stack([emphasised[s : s + win] for s in starts]) * window

    power = np.abs(np.fft.rfft(frames, fft_size, axis=1)) ** 2 / fft_size
    bank = mel_filterbank(cfg.num_mel_filters, fft_size, sr)
    log_energies = np.log(np.maximum(power @ bank.T, cfg.log_floor))
    cepstra = scipy.fft.dct(log_energies, type=2, norm="ortho", axis=1)[:, : cfg.num_coefficients]

    columns = [cepstra]
    width = cfg.num_coefficients
    if cfg.feature_dim > width:
        n_delta = min(width, cfg.feature_dim - width)
        columns.append(_deltas(cepstra)[:, :n_delta])
        width += n_delta
    if cfg.feature_dim > width:
        n_bands = cfg.feature_dim - width
        splits = np.array_split(np.arange(cfg.num_mel_filters), n_bands)
        bands = np.stack([log_energies[:, s].mean(axis=1) for s in splits], axis=1)
        columns.append(bands)
    return np.concatenate(columns, axis=1)
