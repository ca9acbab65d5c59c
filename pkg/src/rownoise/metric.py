"""Row noise measurement.

The metric collapses each row to its mean, takes the sample standard
deviation (N-1 divisor) of those row means per channel, averages the
channel values with equal weight, and finally averages over the frames
of a stack. Averaging over frames rejects temporal noise; a genuinely
row-correlated disturbance survives because it shifts whole rows
coherently while per-pixel noise shrinks as 1/sqrt(width).

band_height_measure recovers the spatial period of a periodic row
disturbance from the spectrum of the row-mean sequence. It is the
measurement-side counterpart of the alias prediction in
physics.alias_and_band_height and stays deliberately independent of it
so the two can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .physics import UNIFORM
from .sensor import Frame

__all__ = [
    "ImageStack",
    "RowProfile",
    "RowNoiseResult",
    "EPS_BAND_DN",
    "row_means",
    "row_noise_single",
    "row_noise",
    "oracle_row_noise",
    "band_height_measure",
]

# Spectral amplitude (DN) below which a profile counts as uniform.
EPS_BAND_DN = 1e-6


@dataclass(frozen=True)
class ImageStack:
    """Frames of identical geometry measured together."""

    frames: list[Frame] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.frames:
            raise ValueError("stack needs at least one frame")
        first = self.frames[0]
        for i, f in enumerate(self.frames):
            if (f.channels, f.rows, f.width) != (first.channels, first.rows, first.width):
                raise ValueError(
                    f"frame {i} is {f.channels}x{f.rows}x{f.width}, "
                    f"expected {first.channels}x{first.rows}x{first.width}"
                )

    @property
    def n_frames(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class RowProfile:
    """Per-channel row means, shape (channels, rows)."""

    means: np.ndarray

    @property
    def channels(self) -> int:
        return self.means.shape[0]

    @property
    def rows(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class RowNoiseResult:
    per_frame: list[float]
    average: float
    n_frames: int
    channels: int


def row_means(frame: Frame) -> RowProfile:
    return RowProfile(means=frame.pixels.astype(np.float64).mean(axis=2))


def row_noise_single(frame: Frame) -> float:
    """Row noise of one frame in DN."""
    if frame.rows < 2:
        raise ValueError(f"need at least 2 rows, got {frame.rows}")
    profile = row_means(frame)
    return float(np.std(profile.means, axis=1, ddof=1).mean())


def row_noise(stack: ImageStack) -> RowNoiseResult:
    """Stack row noise: per-frame values and their average."""
    per_frame = [row_noise_single(f) for f in stack.frames]
    return RowNoiseResult(
        per_frame=per_frame,
        average=sum(per_frame) / len(per_frame),
        n_frames=stack.n_frames,
        channels=stack.frames[0].channels,
    )


def oracle_row_noise(frame: Frame) -> float:
    """Same quantity as row_noise_single, by plain nested loops.

    Kept free of numpy and of any helper shared with the fast path, so
    it can stand as an independent cross-check in tests.
    """
    if frame.rows < 2:
        raise ValueError(f"need at least 2 rows, got {frame.rows}")
    channel_sigmas = []
    for c in range(frame.channels):
        means = []
        for r in range(frame.rows):
            total = 0.0
            for x in range(frame.width):
                total += float(frame.pixels[c][r][x])
            means.append(total / frame.width)
        grand = sum(means) / len(means)
        ss = 0.0
        for m in means:
            ss += (m - grand) ** 2
        channel_sigmas.append(math.sqrt(ss / (len(means) - 1)))
    return sum(channel_sigmas) / len(channel_sigmas)


def band_height_measure(profile: RowProfile, eps_band_dn: float = EPS_BAND_DN) -> float:
    """Band height in rows of the dominant periodic row disturbance.

    Works on the channel-averaged, mean-removed row-mean sequence. The
    strongest Fourier bin k gives a period of rows/k and a band (half a
    period) of rows/(2k). Returns UNIFORM when no bin reaches
    eps_band_dn of amplitude, i.e. the profile is flat.
    """
    if profile.rows < 8:
        raise ValueError(f"need at least 8 rows for a spectrum, got {profile.rows}")
    seq = profile.means.mean(axis=0)
    seq = seq - seq.mean()
    spectrum = np.fft.rfft(seq)
    # Amplitude per bin; bin 0 is the removed mean.
    amplitude = 2.0 * np.abs(spectrum) / profile.rows
    amplitude[0] = 0.0
    k = int(np.argmax(amplitude))
    if amplitude[k] < eps_band_dn:
        return UNIFORM
    return profile.rows / (2.0 * k)
