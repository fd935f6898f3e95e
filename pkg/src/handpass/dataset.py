"""Feature-table assembly: frames -> rows -> dataset slices -> CSV.

Each CSI frame becomes one row of amplitude values followed by phase
values (degrees), plus four metadata columns (capture, gender, hand,
user_id).  Six standard slicings (D1..D6) carve per-capture prefixes of
1 or 5 seconds from captures {1}, {1-3} or {1-5}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .codec import CaptureFile, CsiFrame
from .dsp import (
    SanitizerConfig,
    SubcarrierMask,
    normalize_cfr,
    sanitize_phase,
    to_cfr,
)
from .errors import InsufficientRows, RaggedRows, ZeroSignal

GENDERS = ("M", "F")
HANDS = ("Right", "Left")
META_COLUMNS = ("capture", "gender", "hand", "user_id")

# name -> (seconds per capture, capture numbers used)
SLICE_DEFS = {
    "D1": (1, (1,)),
    "D2": (1, (1, 2, 3)),
    "D3": (1, (1, 2, 3, 4, 5)),
    "D4": (5, (1,)),
    "D5": (5, (1, 2, 3)),
    "D6": (5, (1, 2, 3, 4, 5)),
}


@dataclass(frozen=True)
class CaptureMeta:
    """Identity of one capture session."""

    capture_number: int
    gender: str
    hand: str
    user_id: int

    def __post_init__(self):
        if not 1 <= self.capture_number <= 5:
            raise ValueError(f"capture_number out of range: {self.capture_number}")
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be one of {GENDERS}: {self.gender!r}")
        if self.hand not in HANDS:
            raise ValueError(f"hand must be one of {HANDS}: {self.hand!r}")
        if not 1 <= self.user_id <= 20:
            raise ValueError(f"user_id out of range: {self.user_id}")


@dataclass
class FeatureRow:
    """One preprocessed frame: amplitude block + phase block + metadata."""

    features: np.ndarray
    meta: CaptureMeta
    frame_index: int

    @property
    def label(self) -> int:
        return self.meta.user_id


@dataclass
class FeatureMatrix:
    """Column-named feature table with per-row metadata."""

    features: np.ndarray            # (n, d) float64
    feature_names: tuple
    capture: np.ndarray             # (n,) int
    gender: np.ndarray              # (n,) '<U1'
    hand: np.ndarray                # (n,) str
    user_id: np.ndarray             # (n,) int

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[1] != len(self.feature_names):
            raise RaggedRows("feature block does not match feature_names")
        n = self.features.shape[0]
        for col in (self.capture, self.gender, self.hand, self.user_id):
            if col.shape != (n,):
                raise RaggedRows("metadata column length does not match row count")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_columns(self) -> int:
        """Total column count including the 4 metadata columns."""
        return self.features.shape[1] + len(META_COLUMNS)

    @property
    def labels(self) -> np.ndarray:
        return self.user_id

    @classmethod
    def from_rows(cls, rows: Sequence[FeatureRow], feature_names) -> "FeatureMatrix":
        names = tuple(feature_names)
        if rows:
            feats = np.stack([r.features for r in rows]).astype(np.float64)
        else:
            feats = np.empty((0, len(names)), dtype=np.float64)
        return cls(
            features=feats,
            feature_names=names,
            capture=np.array([r.meta.capture_number for r in rows], dtype=np.int64),
            gender=np.array([r.meta.gender for r in rows], dtype="<U1"),
            hand=np.array([r.meta.hand for r in rows], dtype="<U5"),
            user_id=np.array([r.meta.user_id for r in rows], dtype=np.int64),
        )


@dataclass
class DatasetSlice:
    name: str
    seconds_per_capture: int
    captures_used: tuple
    rows: FeatureMatrix


def feature_names(mask: SubcarrierMask | None = None, prune: bool = False) -> tuple:
    """Column names amp_<k>, phase_<k> with k the logical subcarrier index."""
    if mask is None:
        mask = SubcarrierMask()
    ks = list(mask.useful) if prune else list(range(-128, 128))
    return tuple(f"amp_{k}" for k in ks) + tuple(f"phase_{k}" for k in ks)


def frame_to_features(
    frame: CsiFrame,
    mask: SubcarrierMask,
    sanitizer: SanitizerConfig,
    prune: bool,
) -> np.ndarray:
    """Run one frame through the preprocessing pipeline and lay out features.

    Pipeline: logical reorder -> per-frame gain normalization -> phase
    detrending.  Output is amplitudes then phases in degrees; with prune
    the 22 null/pilot subcarriers are dropped from both blocks.
    """
    cfr = sanitize_phase(normalize_cfr(to_cfr(frame)), sanitizer, mask)
    amp, phase = cfr.amplitude, cfr.phase_deg
    if prune:
        pos = mask.useful_positions
        amp, phase = amp[pos], phase[pos]
    return np.concatenate([amp, phase])


def build_rows(
    capture: CaptureFile,
    meta: CaptureMeta,
    mask: SubcarrierMask | None = None,
    sanitizer: SanitizerConfig | None = None,
    prune: bool = True,
) -> tuple:
    """Convert every frame of a capture into a FeatureRow.

    Returns (rows, dropped) where dropped counts all-zero frames that
    cannot be normalized.  Row width is checked against the fixed layout
    (512 features full, 468 pruned).
    """
    if mask is None:
        mask = SubcarrierMask()
    if sanitizer is None:
        sanitizer = SanitizerConfig()
    expected = 2 * len(mask.useful) if prune else 2 * 256
    rows, dropped = [], 0
    for i, frame in enumerate(capture.frames):
        try:
            feats = frame_to_features(frame, mask, sanitizer, prune)
        except ZeroSignal:
            dropped += 1
            continue
        if feats.shape[0] != expected:
            raise RaggedRows(f"row width {feats.shape[0]}, expected {expected}")
        rows.append(FeatureRow(features=feats, meta=meta, frame_index=i))
    return rows, dropped


def slice_dataset(
    rows: Iterable[FeatureRow],
    slice_name: str,
    packets_per_second: int,
    right_hand_only: bool = True,
) -> DatasetSlice:
    """Carve one of the six standard slicings out of a pool of rows.

    Takes the first ceil(seconds * rate) rows of each required capture
    for every user present, preserving frame order.  Raises
    InsufficientRows when a user is missing a required capture or has
    too few rows in it.
    """
    if slice_name not in SLICE_DEFS:
        raise ValueError(f"unknown slice {slice_name!r}; expected one of {sorted(SLICE_DEFS)}")
    seconds, captures_used = SLICE_DEFS[slice_name]
    need = math.ceil(seconds * packets_per_second)

    pool = [r for r in rows if not right_hand_only or r.meta.hand == "Right"]
    if not pool:
        raise InsufficientRows("no rows to slice")
    width = pool[0].features.shape[0]
    by_key: dict = {}
    for r in pool:
        if r.features.shape[0] != width:
            raise RaggedRows("rows of mixed width cannot be sliced together")
        by_key.setdefault((r.meta.user_id, r.meta.capture_number), []).append(r)

    users = sorted({u for u, _ in by_key})
    picked = []
    for user in users:
        for cap in captures_used:
            have = by_key.get((user, cap))
            if have is None:
                raise InsufficientRows(f"user {user} has no capture {cap}")
            have = sorted(have, key=lambda r: r.frame_index)
            if len(have) < need:
                raise InsufficientRows(
                    f"user {user} capture {cap} has {len(have)} rows, needs {need}"
                )
            picked.extend(have[:need])

    names = feature_names(prune=(width == 468)) if width in (512, 468) else tuple(
        f"f_{i}" for i in range(width)
    )
    return DatasetSlice(
        name=slice_name,
        seconds_per_capture=seconds,
        captures_used=captures_used,
        rows=FeatureMatrix.from_rows(picked, names),
    )


def write_csv(data, path) -> None:
    """Write a FeatureMatrix (or list of FeatureRow) as a headed CSV.

    Floats are rendered with repr so a read round-trips to the exact
    same values.
    """
    if isinstance(data, FeatureMatrix):
        m = data
    else:
        rows = list(data)
        width = rows[0].features.shape[0] if rows else 512
        m = FeatureMatrix.from_rows(rows, feature_names(prune=(width == 468)))
    header = ",".join(m.feature_names + META_COLUMNS)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for i in range(m.n_rows):
            feats = ",".join(repr(v) for v in m.features[i].tolist())
            meta = f"{m.capture[i]},{m.gender[i]},{m.hand[i]},{m.user_id[i]}"
            fh.write(feats + "," + meta + "\n" if feats else meta + "\n")


def read_csv(path) -> FeatureMatrix:
    """Read a CSV written by write_csv; width mismatches raise RaggedRows."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header:
            raise RaggedRows(f"{path}: empty file, expected a header")
        names = header.rstrip("\n").split(",")
        if len(names) < 4 or tuple(names[-4:]) != META_COLUMNS:
            raise RaggedRows(f"{path}: header must end with {META_COLUMNS}")
        fnames = tuple(names[:-4])
        d = len(fnames)
        feats, caps, genders, hands, users = [], [], [], [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) != d + 4:
                raise RaggedRows(
                    f"{path}:{lineno}: {len(parts)} fields, expected {d + 4}"
                )
            feats.append([float(v) for v in parts[:d]])
            caps.append(int(parts[d]))
            genders.append(parts[d + 1])
            hands.append(parts[d + 2])
            users.append(int(parts[d + 3]))
    return FeatureMatrix(
        features=np.array(feats, dtype=np.float64).reshape(len(feats), d),
        feature_names=fnames,
        capture=np.array(caps, dtype=np.int64),
        gender=np.array(genders, dtype="<U1"),
        hand=np.array(hands, dtype="<U5"),
        user_id=np.array(users, dtype=np.int64),
    )
