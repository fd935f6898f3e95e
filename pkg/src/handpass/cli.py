"""handpass command line: one binary, git-style subcommands.

synth     generate synthetic capture files + manifest
dataset   parse captures, preprocess, slice (D1..D6), write CSV
crossval  stratified k-fold CV of one or all models over slice CSVs
select    rank subcarriers by tree feature importance
enroll    train + persist an enrollment store from a slice CSV
auth      one authentication decision from a capture file
serve     line-JSON authentication service

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import dataset as ds
from . import gatekeeper as gk
from . import synth
from .codec import read_capture
from .dsp import SanitizerConfig, apply_scaler, fit_scaler
from .errors import HandpassError
from .learners import (
    KINDS,
    HyperParams,
    cross_validate,
    default_hyper,
    feature_importance,
    select_subcarriers,
    train,
)

log = logging.getLogger("handpass")

MODEL_CHOICES = list(KINDS) + ["all"]


def _env_seed(default: int = 42) -> int:
    raw = os.environ.get("HANDPASS_SEED")
    return int(raw) if raw else default


def _print_config(args: argparse.Namespace) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"config: {json.dumps(cfg, default=str)}")


def _print_table(headers, rows) -> None:
    cells = [list(map(str, headers))] + [list(map(str, r)) for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    for i, row in enumerate(cells):
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            print("  ".join("-" * w for w in widths))


def _hyper_from(args: argparse.Namespace, kind: str) -> HyperParams:
    hp = default_hyper(kind)
    overrides = {}
    if getattr(args, "trees", None) is not None:
        overrides["n_trees"] = args.trees
    if getattr(args, "max_depth", None) is not None:
        overrides["max_depth"] = args.max_depth
    if getattr(args, "knn_k", None) is not None:
        overrides["k_neighbors"] = args.knn_k
    if getattr(args, "svm_epochs", None) is not None:
        overrides["svm_epochs"] = args.svm_epochs
    from dataclasses import replace

    return replace(hp, **overrides) if overrides else hp


def cmd_synth(args) -> int:
    cfg = synth.SynthConfig(
        users=args.users,
        captures_per_user=args.captures,
        frames_per_capture=args.frames,
        packets_per_second=args.rate,
        noise_sigma=args.noise,
        bump_count=args.bumps,
        ramp_range=args.ramp,
        offset_range=args.offset_range,
        gain_jitter=args.gain_jitter,
        quant_scale=args.quant_scale,
        seed=args.seed,
    )
    manifest = synth.generate(cfg, args.out)
    n = len(manifest["captures"])
    print(f"wrote {n} captures ({cfg.users} users x {cfg.captures_per_user})"
          f" to {args.out}")
    print(f"manifest: {os.path.join(args.out, synth.MANIFEST_NAME)}")
    return 0


def _rows_from_manifest(args, manifest):
    sanitizer = SanitizerConfig(lam=args.lam)
    rows, dropped = [], 0
    for entry in manifest["captures"]:
        meta = ds.CaptureMeta(
            capture_number=entry["capture_number"],
            gender=entry["gender"],
            hand=entry["hand"],
            user_id=entry["user_id"],
        )
        capture = read_capture(os.path.join(args.indir, entry["path"]))
        got, bad = ds.build_rows(capture, meta, sanitizer=sanitizer, prune=args.prune)
        rows.extend(got)
        dropped += bad
        log.info("parsed %s: %d rows", entry["path"], len(got))
    return rows, dropped


def cmd_dataset(args) -> int:
    manifest = synth.load_manifest(os.path.join(args.indir, synth.MANIFEST_NAME))
    rate = args.rate or manifest["config"]["packets_per_second"]
    rows, dropped = _rows_from_manifest(args, manifest)
    sliced = ds.slice_dataset(rows, args.slice, rate,
                              right_hand_only=not args.include_left)
    matrix = sliced.rows
    if args.scaler != "none":
        matrix.features = apply_scaler(
            fit_scaler(args.scaler, matrix.features), matrix.features
        )
    ds.write_csv(matrix, args.out)
    print(f"slice {args.slice}: {matrix.n_rows} rows x {matrix.n_columns} columns"
          f" ({dropped} frames dropped) -> {args.out}")
    return 0


def _load_xy(path):
    m = ds.read_csv(path)
    return m, m.features, m.labels


def cmd_crossval(args) -> int:
    kinds = list(KINDS) if args.model == "all" else [args.model]
    report_rows = []
    for data_path in args.data:
        slice_name = os.path.splitext(os.path.basename(data_path))[0]
        _, X, y = _load_xy(data_path)
        table = []
        for kind in kinds:
            rep = cross_validate(
                kind, X, y, k=args.k, hyper=_hyper_from(args, kind),
                seed=args.seed, scaler=None if args.scaler == "none" else args.scaler,
                per_fold_scaler=args.per_fold_scaler,
            )
            table.append([
                KINDS[kind],
                f"{rep.mean_accuracy:.4f}",
                f"{rep.mean_precision:.4f}",
                f"{rep.mean_recall:.4f}",
                f"{rep.mean_f1:.4f}",
            ])
            for fold, f1 in enumerate(rep.fold_f1):
                report_rows.append([
                    slice_name, KINDS[kind], fold,
                    repr(rep.fold_accuracy[fold]), repr(f1),
                ])
        print(f"\n{slice_name}: {args.k}-fold cross-validation"
              f" ({X.shape[0]} rows, {len(np.unique(y))} classes)")
        _print_table(["Model", "Accuracy", "Precision", "Recall", "F1-Score"], table)
    if args.report:
        with open(args.report, "w", encoding="ascii") as fh:
            fh.write("slice,model,fold,accuracy,f1\n")
            for row in report_rows:
                fh.write(",".join(map(str, row)) + "\n")
        print(f"\nreport: {args.report}")
    return 0


def cmd_select(args) -> int:
    m, X, y = _load_xy(args.data)
    model = train(args.model, X, y, _hyper_from(args, args.model), args.seed)
    imp = feature_importance(model)
    picked = select_subcarriers(imp, args.top, names=m.feature_names)
    print(f"top {args.top} subcarriers by {KINDS[args.model]} importance:")
    print(" ".join(str(k) for k in picked))
    if args.report:
        per_k = {}
        for name, w in zip(m.feature_names, imp):
            k = int(name.split("_", 1)[1])
            per_k[k] = per_k.get(k, 0.0) + float(w)
        with open(args.report, "w", encoding="ascii") as fh:
            fh.write("subcarrier,importance\n")
            for k in sorted(per_k):
                fh.write(f"{k},{repr(per_k[k])}\n")
        print(f"report: {args.report}")
    return 0


def _store_path(args) -> str:
    path = args.store or os.environ.get("HANDPASS_STORE")
    if not path:
        raise HandpassError("no store path: pass --store or set HANDPASS_STORE")
    return path


def cmd_enroll(args) -> int:
    m, X, y = _load_xy(args.data)
    by_user = {int(u): X[y == u] for u in np.unique(y)}
    prune = len(m.feature_names) == 468
    store = gk.enroll(
        by_user,
        hyper=_hyper_from(args, args.model),
        seed=args.seed,
        kind=args.model,
        scaler_kind=args.scaler,
        packets_per_second=args.rate,
        prune=prune,
    )
    gk.save_store(store, _store_path(args))
    print(f"enrolled {len(by_user)} users ({X.shape[0]} rows,"
          f" {KINDS[args.model]}) -> {_store_path(args)}")
    return 0


def cmd_auth(args) -> int:
    store = gk.load_store(_store_path(args))
    capture = read_capture(args.capture)
    audit = gk.AuditLog(args.log) if args.log else None
    decision = gk.authenticate(
        store,
        capture.frames,
        window_seconds=args.window,
        threshold=args.threshold,
        permission=args.permission,
        log=audit,
    )
    _print_table(
        ["Decision", "User", "VoteShare", "Frames", "Window(s)", "Reason"],
        [[
            decision.decision,
            decision.user_id,
            f"{decision.vote_share:.3f}",
            decision.frames_used,
            f"{decision.window_seconds:.3f}",
            decision.reason,
        ]],
    )
    return 0


def cmd_serve(args) -> int:
    store = gk.load_store(_store_path(args))
    audit = gk.AuditLog(args.log) if args.log else None
    server = gk.serve(store, host=args.host, port=args.port, log=audit)
    host, port = server.server_address[:2]
    print(f"serving on {host}:{port} (ctrl-c to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="handpass", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add_seed(sp):
        sp.add_argument("--seed", type=int, default=_env_seed(),
                        help="RNG seed (env HANDPASS_SEED, default 42)")

    sp = sub.add_parser("synth", help="generate synthetic captures")
    sp.add_argument("--out", required=True)
    sp.add_argument("--users", type=int, default=20)
    sp.add_argument("--captures", type=int, default=5)
    sp.add_argument("--frames", type=int, default=5500)
    sp.add_argument("--rate", type=int, default=1000)
    sp.add_argument("--noise", type=float, default=0.5)
    sp.add_argument("--bumps", type=int, default=4)
    sp.add_argument("--ramp", type=float, default=0.05)
    sp.add_argument("--offset-range", type=float, default=float(np.pi))
    sp.add_argument("--gain-jitter", type=float, default=0.2)
    sp.add_argument("--quant-scale", type=float, default=1000.0)
    add_seed(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("dataset", help="build a slice CSV from captures")
    sp.add_argument("--in", dest="indir", required=True)
    sp.add_argument("--slice", required=True, choices=sorted(ds.SLICE_DEFS))
    sp.add_argument("--out", required=True)
    sp.add_argument("--scaler", choices=["minmax", "zscore", "robust", "none"],
                    default="none")
    sp.add_argument("--prune", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("--include-left", action="store_true",
                    help="keep left-hand captures (default: right hand only)")
    sp.add_argument("--lam", type=float, default=0.1,
                    help="phase-detrend ridge weight")
    sp.add_argument("--rate", type=int, default=None,
                    help="packets per second (default: manifest value)")
    add_seed(sp)
    sp.set_defaults(func=cmd_dataset)

    sp = sub.add_parser("crossval", help="k-fold cross-validation")
    sp.add_argument("--data", nargs="+", required=True, help="slice CSV(s)")
    sp.add_argument("--model", choices=MODEL_CHOICES, default="rf")
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--scaler", choices=["minmax", "zscore", "robust", "none"],
                    default="none")
    sp.add_argument("--per-fold-scaler", action="store_true",
                    help="refit the scaler inside each training fold")
    sp.add_argument("--trees", type=int, default=None)
    sp.add_argument("--max-depth", type=int, default=None)
    sp.add_argument("--knn-k", type=int, default=None)
    sp.add_argument("--svm-epochs", type=int, default=None)
    sp.add_argument("--report", default=None, help="per-fold CSV output")
    add_seed(sp)
    sp.set_defaults(func=cmd_crossval)

    sp = sub.add_parser("select", help="rank subcarriers by importance")
    sp.add_argument("--data", required=True)
    sp.add_argument("--top", type=int, default=20)
    sp.add_argument("--model", choices=["dt", "rf"], default="dt")
    sp.add_argument("--trees", type=int, default=None)
    sp.add_argument("--max-depth", type=int, default=None)
    sp.add_argument("--report", default=None)
    add_seed(sp)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("enroll", help="train + save an enrollment store")
    sp.add_argument("--data", required=True, help="slice CSV of enrollment rows")
    sp.add_argument("--store", default=None, help="output path (env HANDPASS_STORE)")
    sp.add_argument("--model", choices=sorted(KINDS), default="rf")
    sp.add_argument("--scaler", choices=["minmax", "zscore", "robust"],
                    default="minmax")
    sp.add_argument("--rate", type=int, default=1000)
    sp.add_argument("--trees", type=int, default=None)
    sp.add_argument("--max-depth", type=int, default=None)
    sp.add_argument("--knn-k", type=int, default=None)
    sp.add_argument("--svm-epochs", type=int, default=None)
    add_seed(sp)
    sp.set_defaults(func=cmd_enroll)

    sp = sub.add_parser("auth", help="authenticate one capture")
    sp.add_argument("--store", default=None)
    sp.add_argument("--capture", required=True)
    sp.add_argument("--window", type=float, default=gk.DEFAULT_WINDOW_SECONDS)
    sp.add_argument("--threshold", type=float, default=gk.DEFAULT_THRESHOLD)
    sp.add_argument("--permission", default=gk.DEFAULT_PERMISSION)
    sp.add_argument("--log", default=None, help="audit log path")
    add_seed(sp)
    sp.set_defaults(func=cmd_auth)

    sp = sub.add_parser("serve", help="run the authentication service")
    sp.add_argument("--store", default=None)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=5501)
    sp.add_argument("--log", default=None)
    add_seed(sp)
    sp.set_defaults(func=cmd_serve)

    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    _print_config(args)
    try:
        return args.func(args)
    except HandpassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
