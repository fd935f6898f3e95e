"""Access control on top of the trained pipeline.

Enrollment trains a classifier over per-user feature rows and freezes
the whole preprocessing configuration (mask, sanitizer, scaler) into a
store.  Authentication pushes a window of raw frames through that
frozen pipeline, takes the modal per-frame prediction, and grants only
when the modal share clears the vote threshold and the user holds the
required permission.  Every decision can be appended to a JSON-lines
audit log; a small TCP service exposes the same operation.
"""

from __future__ import annotations

import json
import math
import os
import re
import socketserver
import threading
import time
from dataclasses import asdict, dataclass

import numpy as np

from .codec import CsiFrame, read_capture
from .dataset import frame_to_features
from .dsp import FittedScaler, SanitizerConfig, SubcarrierMask, apply_scaler, fit_scaler
from .errors import (
    DegenerateLabels,
    HandpassError,
    TooFewFrames,
    WindowTooShort,
    ZeroSignal,
)
from .learners import HyperParams, model_from_doc, model_to_doc, predict, train

STORE_FORMAT = "handpass-store"
STORE_VERSION = 1
MIN_ENROLL_USERS = 2
MIN_ENROLL_FRAMES = 100
DEFAULT_THRESHOLD = 0.6
DEFAULT_WINDOW_SECONDS = 1.0
DEFAULT_PERMISSION = "enter"


@dataclass
class EnrollmentStore:
    model: object
    scaler: FittedScaler
    mask: SubcarrierMask
    sanitizer: SanitizerConfig
    roster: dict                    # user_id -> set of permission strings
    packets_per_second: int
    prune: bool = True
    version: int = STORE_VERSION
    created_at: str = ""

    def __post_init__(self):
        if not set(self.roster) <= set(int(c) for c in self.model.classes):
            raise ValueError("roster contains users the model was not trained on")


@dataclass
class AuthDecision:
    user_id: int | None
    vote_share: float
    frames_used: int
    window_seconds: float
    decision: str                   # "Grant" | "Deny"
    reason: str


def enroll(
    rows_by_user: dict,
    hyper: HyperParams | None = None,
    seed: int = 0,
    kind: str = "rf",
    scaler_kind: str = "minmax",
    mask: SubcarrierMask | None = None,
    sanitizer: SanitizerConfig | None = None,
    packets_per_second: int = 1000,
    prune: bool = True,
    permissions=(DEFAULT_PERMISSION,),
) -> EnrollmentStore:
    """Fit scaler + classifier on per-user feature rows and build a store.

    rows_by_user maps user_id -> (n_u, d) preprocessed feature block.
    """
    if len(rows_by_user) < MIN_ENROLL_USERS:
        raise DegenerateLabels(
            f"enrollment needs at least {MIN_ENROLL_USERS} users, got {len(rows_by_user)}"
        )
    for uid, rows in rows_by_user.items():
        if np.asarray(rows).shape[0] < MIN_ENROLL_FRAMES:
            raise TooFewFrames(
                f"user {uid} has {np.asarray(rows).shape[0]} frames,"
                f" fewer than {MIN_ENROLL_FRAMES}"
            )
    users = sorted(rows_by_user)
    X = np.vstack([np.asarray(rows_by_user[u], dtype=np.float64) for u in users])
    y = np.concatenate(
        [np.full(np.asarray(rows_by_user[u]).shape[0], u, dtype=np.int64) for u in users]
    )
    scaler = fit_scaler(scaler_kind, X)
    model = train(kind, apply_scaler(scaler, X), y, hyper, seed)
    return EnrollmentStore(
        model=model,
        scaler=scaler,
        mask=mask if mask is not None else SubcarrierMask(),
        sanitizer=sanitizer if sanitizer is not None else SanitizerConfig(),
        roster={u: set(permissions) for u in users},
        packets_per_second=packets_per_second,
        prune=prune,
        created_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    )


def authenticate(
    store: EnrollmentStore,
    frames,
    window_seconds: float = DEFAULT_WINDOW_SECONDS,
    threshold: float = DEFAULT_THRESHOLD,
    permission: str = DEFAULT_PERMISSION,
    log: "AuditLog | None" = None,
) -> AuthDecision:
    """Decide one access attempt from a window of raw frames.

    The window must span window_seconds at the store's packet rate.
    Frames that fail preprocessing (all-zero) are dropped; the modal
    prediction over the rest must reach the vote-share threshold and
    be enrolled with the required permission.
    """
    frames = list(frames)
    need = math.ceil(window_seconds * store.packets_per_second)
    if len(frames) < need:
        raise WindowTooShort(
            f"{len(frames)} frames span less than {window_seconds} s"
            f" at {store.packets_per_second} pkt/s (need {need})"
        )
    feats = []
    for frame in frames:
        try:
            feats.append(frame_to_features(frame, store.mask, store.sanitizer, store.prune))
        except ZeroSignal:
            continue
    if not feats:
        raise ZeroSignal("every frame in the window was degenerate")
    X = apply_scaler(store.scaler, np.stack(feats))
    preds = predict(store.model, X)
    values, counts = np.unique(preds, return_counts=True)
    top = int(np.argmax(counts))  # ties resolve to the lowest label
    user = int(values[top])
    share = float(counts[top] / len(feats))

    if share < threshold:
        verdict, reason = "Deny", "below threshold"
    elif user not in store.roster:
        verdict, reason = "Deny", "not enrolled"
    elif permission not in store.roster[user]:
        verdict, reason = "Deny", "missing permission"
    else:
        verdict, reason = "Grant", "ok"
    decision = AuthDecision(
        user_id=user,
        vote_share=share,
        frames_used=len(feats),
        window_seconds=len(feats) / store.packets_per_second,
        decision=verdict,
        reason=reason,
    )
    if log is not None:
        log.append(decision)
    return decision


class AuditLog:
    """Append-only JSON-lines decision log with monotonic timestamps."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._last_ts = 0.0

    def append(self, decision: AuthDecision) -> None:
        with self._lock:
            ts = max(time.time(), math.nextafter(self._last_ts, math.inf))
            self._last_ts = ts
            record = {"ts": ts, **asdict(decision)}
            with open(self.path, "a", encoding="ascii") as fh:
                fh.write(json.dumps(record) + "\n")
                fh.flush()

    def read(self, start: int = 0, stop: int | None = None):
        """Records [start:stop] plus warnings for undecodable lines.

        A torn final line (crash mid-append) is reported as a warning,
        never an exception.
        """
        records, warnings = [], []
        if not os.path.exists(self.path):
            return records, warnings
        with open(self.path, "r", encoding="ascii", errors="replace") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.rstrip("\n")
                if not stripped:
                    continue
                try:
                    records.append(json.loads(stripped))
                except json.JSONDecodeError:
                    warnings.append(f"line {lineno}: undecodable record skipped")
        return records[start:stop], warnings


def audit_append(log: AuditLog, decision: AuthDecision) -> None:
    log.append(decision)


def audit_read(log: AuditLog, start: int = 0, stop: int | None = None):
    return log.read(start, stop)


def _scaler_to_doc(s: FittedScaler) -> dict:
    return {"kind": s.kind, "a": s.a.tolist(), "b": s.b.tolist()}


def save_store(store: EnrollmentStore, path) -> None:
    doc = {
        "format": STORE_FORMAT,
        "version": store.version,
        "created_at": store.created_at,
        "model": model_to_doc(store.model),
        "scaler": _scaler_to_doc(store.scaler),
        "mask": {
            "null": sorted(store.mask.null_indices),
            "pilot": sorted(store.mask.pilot_indices),
        },
        "sanitizer": {"lam": store.sanitizer.lam, "unwrap": store.sanitizer.unwrap},
        "roster": {str(u): sorted(perms) for u, perms in store.roster.items()},
        "packets_per_second": store.packets_per_second,
        "prune": store.prune,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh)


def load_store(path) -> EnrollmentStore:
    with open(path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    if doc.get("format") != STORE_FORMAT:
        raise ValueError(f"not a {STORE_FORMAT} document")
    if doc.get("version") != STORE_VERSION:
        raise ValueError(f"unsupported store version {doc.get('version')!r}")
    return EnrollmentStore(
        model=model_from_doc(doc["model"]),
        scaler=FittedScaler(
            kind=doc["scaler"]["kind"],
            a=np.array(doc["scaler"]["a"], dtype=np.float64),
            b=np.array(doc["scaler"]["b"], dtype=np.float64),
        ),
        mask=SubcarrierMask(
            null_indices=frozenset(doc["mask"]["null"]),
            pilot_indices=frozenset(doc["mask"]["pilot"]),
        ),
        sanitizer=SanitizerConfig(
            lam=doc["sanitizer"]["lam"], unwrap=doc["sanitizer"]["unwrap"]
        ),
        roster={int(u): set(perms) for u, perms in doc["roster"].items()},
        packets_per_second=doc["packets_per_second"],
        prune=doc["prune"],
        version=doc["version"],
        created_at=doc.get("created_at", ""),
    )


def _error_code(exc: Exception) -> str:
    # WindowTooShort -> "window-too-short"
    return re.sub(r"(?<!^)(?=[A-Z])", "-", type(exc).__name__).lower()


class AuthServer(socketserver.ThreadingTCPServer):
    """Line-delimited JSON request/response service around authenticate.

    Requests: {"op": "authenticate", "capture": <pcap path>} or
    {"op": "authenticate", "frames": [[re, im] x 256, ...]}, plus
    optional window_seconds / threshold / permission.  Errors come back
    in-band as {"ok": false, "error": {...}}; the connection survives.
    """

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, endpoint, store: EnrollmentStore | None, log: AuditLog | None = None):
        self.store = store
        self.log = log
        super().__init__(endpoint, _AuthHandler)


class _AuthHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            try:
                reply = self._one_request(raw)
            except HandpassError as exc:
                reply = {"ok": False, "error": {"code": _error_code(exc), "message": str(exc)}}
            except Exception as exc:  # malformed input must never kill the server
                reply = {"ok": False, "error": {"code": "bad-request", "message": str(exc)}}
            self.wfile.write((json.dumps(reply) + "\n").encode("ascii"))
            self.wfile.flush()

    def _one_request(self, raw: bytes) -> dict:
        try:
            req = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return {"ok": False, "error": {"code": "bad-request", "message": str(exc)}}
        if not isinstance(req, dict) or req.get("op") != "authenticate":
            return {"ok": False, "error": {"code": "bad-request",
                                           "message": "expected op=authenticate"}}
        store = self.server.store
        if store is None:
            return {"ok": False, "error": {"code": "not-ready",
                                           "message": "no enrollment store loaded"}}
        if "capture" in req:
            frames = read_capture(req["capture"]).frames
        elif "frames" in req:
            frames = [_inline_frame(f) for f in req["frames"]]
        else:
            return {"ok": False, "error": {"code": "bad-request",
                                           "message": "need capture or frames"}}
        decision = authenticate(
            store,
            frames,
            window_seconds=req.get("window_seconds", DEFAULT_WINDOW_SECONDS),
            threshold=req.get("threshold", DEFAULT_THRESHOLD),
            permission=req.get("permission", DEFAULT_PERMISSION),
            log=self.server.log,
        )
        return {"ok": True, "decision": asdict(decision)}


def _inline_frame(pairs):
    csi = np.asarray(pairs, dtype=np.int64)
    if csi.shape != (256, 2):
        raise ValueError(f"inline frame must be 256 [re, im] pairs, got {csi.shape}")
    if csi.max() > 32767 or csi.min() < -32768:
        raise ValueError("inline frame values exceed int16 range")
    return CsiFrame(
        ts_sec=0, ts_usec=0, rssi=0, frame_control=0,
        source_mac=b"\x00" * 6, sequence_number=0, core_spatial=0,
        chanspec=0, chip_version=0, csi=csi.astype(np.int16),
    )


def serve(store: EnrollmentStore | None, host: str = "127.0.0.1", port: int = 5501,
          log: AuditLog | None = None) -> AuthServer:
    """Bind the service; caller drives serve_forever()/shutdown()."""
    return AuthServer((host, port), store, log)
