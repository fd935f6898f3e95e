"""Frequency-domain preprocessing for CSI frames.

Turns raw hardware-order subcarrier samples into sanitized amplitude and
phase vectors: FFT shift into logical order, per-frame amplitude
normalization, ridge-regularized linear phase detrending over the useful
subcarriers, and the three dataset-level feature scalers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import CsiFrame
from .errors import DimensionMismatch, EmptyMatrix, OddLength, ZeroSignal

N_SUBCARRIERS = 256
LOGICAL_INDICES = np.arange(-128, 128)

# Subcarriers that carry no channel information at 80 MHz: guard/DC bins
# and fixed reference tones.  The remaining 234 are the useful set.
NULL_SUBCARRIERS = frozenset(
    (-128, -127, -126, -125, -124, -123, -1, 0, 1, 123, 124, 125, 126, 127)
)
PILOT_SUBCARRIERS = frozenset((-103, -75, -39, -11, 11, 39, 75, 103))


@dataclass(frozen=True)
class SubcarrierMask:
    """Partition of the 256 logical subcarrier indices into null/pilot/useful."""

    null_indices: frozenset = NULL_SUBCARRIERS
    pilot_indices: frozenset = PILOT_SUBCARRIERS
    useful: tuple = ()

    def __post_init__(self):
        if not self.useful:
            useful = tuple(
                k for k in range(-128, 128)
                if k not in self.null_indices and k not in self.pilot_indices
            )
            object.__setattr__(self, "useful", useful)
        claimed = set(self.null_indices) | set(self.pilot_indices) | set(self.useful)
        if claimed != set(range(-128, 128)) or len(self.null_indices) + len(
            self.pilot_indices
        ) + len(self.useful) != N_SUBCARRIERS:
            raise ValueError("null, pilot and useful sets must partition -128..127")

    @property
    def useful_positions(self) -> np.ndarray:
        """Array positions (0-based) of the useful subcarriers."""
        return np.asarray(self.useful) + 128


@dataclass(frozen=True)
class SanitizerConfig:
    """Phase sanitization settings: ridge weight and unwrap toggle."""

    lam: float = 0.1
    unwrap: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


@dataclass
class CfrVector:
    """One frame's channel frequency response in logical subcarrier order.

    Position i holds logical subcarrier i - 128.  Amplitude and phase are
    always derived from ``subcarriers`` so the three views stay consistent.
    """

    subcarriers: np.ndarray
    amplitude: np.ndarray
    phase_deg: np.ndarray

    @classmethod
    def from_subcarriers(cls, z: np.ndarray) -> "CfrVector":
        z = np.asarray(z, dtype=np.complex128)
        if z.shape != (N_SUBCARRIERS,):
            raise ValueError(f"expected {N_SUBCARRIERS} subcarriers, got {z.shape}")
        return cls(
            subcarriers=z,
            amplitude=np.abs(z),
            phase_deg=np.degrees(np.angle(z)),
        )

    def phase_rad(self) -> np.ndarray:
        return np.angle(self.subcarriers)


def fft_shift(values) -> np.ndarray:
    """Rotate a vector by half its length: out[i] = in[(i + n/2) mod n].

    Maps hardware subcarrier order to logical order -n/2 .. n/2-1 and is
    its own inverse for even n.
    """
    values = np.asarray(values)
    n = values.shape[0]
    if n % 2 != 0:
        raise OddLength(f"fft_shift needs an even length, got {n}")
    half = n // 2
    return np.concatenate([values[half:], values[:half]])


def to_cfr(frame: CsiFrame) -> CfrVector:
    """Promote a raw frame to a complex CFR vector in logical order."""
    return CfrVector.from_subcarriers(fft_shift(frame.csi_complex))


def normalize_cfr(cfr: CfrVector) -> CfrVector:
    """Divide every subcarrier by the mean amplitude over all 256 bins.

    Removes per-frame gain (AGC and transmit-power variation); the
    resulting mean amplitude is 1 and phases are untouched.
    """
    mean_amp = float(cfr.amplitude.mean())
    if mean_amp <= 0.0:
        raise ZeroSignal("all-zero frame cannot be normalized")
    return CfrVector.from_subcarriers(cfr.subcarriers / mean_amp)


def sanitize_phase(
    cfr: CfrVector,
    cfg: SanitizerConfig | None = None,
    mask: SubcarrierMask | None = None,
) -> CfrVector:
    """Remove the frame's linear phase trend (sampling/clock offsets).

    Phases are unwrapped across the ascending useful subcarriers, a line
    a*k + b is fitted to them by ridge-regularized least squares
    (penalty lam * (a^2 + b^2)), and the fitted trend is subtracted from
    all 256 phases.  Amplitudes are untouched.
    """
    if cfg is None:
        cfg = SanitizerConfig()
    if mask is None:
        mask = SubcarrierMask()

    phase = np.angle(cfr.subcarriers)
    pos = mask.useful_positions
    k = np.asarray(mask.useful, dtype=np.float64)

    phi = phase[pos]
    if cfg.unwrap:
        phi = np.unwrap(phi)

    # Normal equations of the ridge problem, solved in closed form.
    s2 = float(np.dot(k, k)) + cfg.lam
    s1 = float(k.sum())
    s0 = float(k.size) + cfg.lam
    r1 = float(np.dot(k, phi))
    r0 = float(phi.sum())
    det = s2 * s0 - s1 * s1
    a = (s0 * r1 - s1 * r0) / det
    b = (s2 * r0 - s1 * r1) / det

    full_phase = phase.copy()
    full_phase[pos] = phi
    residual = full_phase - (a * LOGICAL_INDICES + b)
    return CfrVector.from_subcarriers(cfr.amplitude * np.exp(1j * residual))


@dataclass
class FittedScaler:
    """Per-feature affine normalization parameters.

    ``a``/``b`` hold (min, max) for minmax, (mean, stddev) for zscore and
    (median, iqr) for robust.  Features whose denominator is zero map
    to 0.
    """

    kind: str
    a: np.ndarray
    b: np.ndarray

    @property
    def n_features(self) -> int:
        return self.a.shape[0]

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        x = np.asarray(matrix, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[1] != self.n_features:
            raise DimensionMismatch(
                f"matrix has {x.shape[1]} columns, scaler was fitted on {self.n_features}"
            )
        denom = self.b - self.a if self.kind == "minmax" else self.b
        out = np.zeros_like(x)
        np.divide(x - self.a, denom, out=out, where=denom != 0)
        return out


SCALER_KINDS = ("minmax", "zscore", "robust")


def fit_scaler(kind: str, matrix: np.ndarray) -> FittedScaler:
    """Fit per-column scaling parameters on a feature matrix.

    zscore uses the population standard deviation; robust uses
    linear-interpolation quartiles.
    """
    if kind not in SCALER_KINDS:
        raise ValueError(f"unknown scaler kind {kind!r}")
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.size == 0:
        raise EmptyMatrix("cannot fit a scaler on an empty matrix")
    if kind == "minmax":
        a, b = x.min(axis=0), x.max(axis=0)
    elif kind == "zscore":
        a, b = x.mean(axis=0), x.std(axis=0)
    else:
        q1, q3 = np.percentile(x, [25, 75], axis=0)
        a, b = np.percentile(x, 50, axis=0), q3 - q1
    return FittedScaler(kind=kind, a=np.asarray(a, dtype=np.float64), b=np.asarray(b, dtype=np.float64))


def apply_scaler(scaler: FittedScaler, matrix: np.ndarray) -> np.ndarray:
    return scaler.transform(matrix)
