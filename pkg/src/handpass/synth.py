"""Seeded synthetic CSI capture generator.

Emulates the capture protocol end to end so the pipeline can be
verified against known ground truth: each user gets a stable spectral
amplitude signature (baseline + Gaussian bumps) and a nonlinear phase
signature; each frame perturbs them with a random linear phase ramp and
offset (what phase sanitization must remove), a random gain (what
amplitude normalization must remove), and complex Gaussian noise.  This
is a software-verification stand-in, not a physical channel model.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .codec import CsiFrame, write_capture
from .dsp import fft_shift

MANIFEST_FORMAT = "handpass-synth-manifest"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

_CHANSPEC = 0xE22A
_LOGICAL_K = np.arange(-128, 128, dtype=np.float64)


@dataclass(frozen=True)
class SynthConfig:
    users: int = 20
    captures_per_user: int = 5
    frames_per_capture: int = 5500
    packets_per_second: int = 1000
    noise_sigma: float = 0.5
    bump_count: int = 4
    ramp_range: float = 0.05       # max |phase slope| in rad/subcarrier
    offset_range: float = np.pi    # max |phase offset| in rad
    gain_jitter: float = 0.2       # per-frame gain in 1 +/- gain_jitter
    quant_scale: float = 1000.0    # int16 quantization headroom
    seed: int = 42

    def __post_init__(self):
        for name in ("users", "captures_per_user", "frames_per_capture",
                     "packets_per_second", "bump_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("noise_sigma", "ramp_range", "offset_range",
                     "gain_jitter", "quant_scale"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def _user_gender(user_id: int) -> str:
    # alternate so any prefix of users stays near gender-balanced
    return "M" if user_id % 2 == 1 else "F"


def _user_signature(cfg: SynthConfig, user_id: int):
    """Per-user amplitude curve A(k) > 0 and nonlinear phase curve (rad).

    Both signatures are narrow Gaussian bumps on a shared smooth
    baseline, so the identifying information is concentrated in a few
    subcarriers rather than spread over the whole band.
    """
    rng = np.random.default_rng((cfg.seed, user_id, 0))
    cycles = rng.uniform(1.0, 3.0)
    phase0 = rng.uniform(0.0, 2.0 * np.pi)
    amp = 1.0 + 0.25 * np.cos(2.0 * np.pi * cycles * (_LOGICAL_K + 128) / 256.0 + phase0)
    for _ in range(cfg.bump_count):
        center = rng.uniform(-120.0, 120.0)
        width = rng.uniform(2.0, 8.0)
        height = rng.uniform(0.5, 1.5)
        amp = amp + height * np.exp(-((_LOGICAL_K - center) ** 2) / (2.0 * width**2))
    phase = np.zeros(256)
    for _ in range(cfg.bump_count):
        center = rng.uniform(-120.0, 120.0)
        width = rng.uniform(2.0, 8.0)
        height = rng.uniform(0.5, 1.5) * rng.choice((-1.0, 1.0))
        phase = phase + height * np.exp(-((_LOGICAL_K - center) ** 2) / (2.0 * width**2))
    return amp, phase


def _capture_frames(cfg: SynthConfig, user_id: int, capture_number: int) -> list:
    amp_u, phase_u = _user_signature(cfg, user_id)
    rng = np.random.default_rng((cfg.seed, user_id, capture_number))
    mac = bytes((0x02, 0x00, 0x00, 0x00, 0x00, user_id & 0xFF))
    usec_step = 1_000_000 // cfg.packets_per_second
    frames = []
    for t in range(cfg.frames_per_capture):
        ramp = rng.uniform(-cfg.ramp_range, cfg.ramp_range)
        offset = rng.uniform(-cfg.offset_range, cfg.offset_range)
        gain = 1.0 + rng.uniform(-cfg.gain_jitter, cfg.gain_jitter)
        noise = cfg.noise_sigma * (
            rng.standard_normal(256) + 1j * rng.standard_normal(256)
        )
        z = gain * amp_u * np.exp(1j * (phase_u + ramp * _LOGICAL_K + offset)) + noise
        z = cfg.quant_scale * fft_shift(z)  # logical -> hardware order
        csi = np.empty((256, 2), dtype=np.int16)
        csi[:, 0] = np.clip(np.rint(z.real), -32768, 32767).astype(np.int16)
        csi[:, 1] = np.clip(np.rint(z.imag), -32768, 32767).astype(np.int16)
        micros = t * usec_step
        frames.append(
            CsiFrame(
                ts_sec=micros // 1_000_000,
                ts_usec=micros % 1_000_000,
                rssi=-40,
                frame_control=0x80,
                source_mac=mac,
                sequence_number=t & 0xFFFF,
                core_spatial=0,
                chanspec=_CHANSPEC,
                chip_version=0,
                csi=csi,
            )
        )
    return frames


def generate(cfg: SynthConfig, out_dir) -> dict:
    """Write every capture file plus manifest.json; returns the manifest.

    Captures are independent per (user, capture) random substream, so
    regeneration with the same config is byte-identical file by file.
    """
    os.makedirs(out_dir, exist_ok=True)
    captures = []
    for user_id in range(1, cfg.users + 1):
        for cap in range(1, cfg.captures_per_user + 1):
            rel = os.path.join(f"user_{user_id:02d}", "Right", f"capture_{cap}.pcap")
            path = os.path.join(out_dir, rel)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            write_capture(_capture_frames(cfg, user_id, cap), path)
            captures.append(
                {
                    "path": rel,
                    "user_id": user_id,
                    "gender": _user_gender(user_id),
                    "hand": "Right",
                    "capture_number": cap,
                    "frames": cfg.frames_per_capture,
                }
            )
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "config": asdict(cfg),
        "captures": captures,
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="ascii") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"not a {MANIFEST_FORMAT} document")
    return manifest


def oracle_labels(manifest: dict) -> np.ndarray:
    """Ground-truth user id per frame, in manifest entry order."""
    out = []
    for entry in manifest["captures"]:
        out.extend([entry["user_id"]] * entry["frames"])
    return np.array(out, dtype=np.int64)
