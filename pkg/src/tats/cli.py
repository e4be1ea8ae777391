"""Command-line surface.

Every subcommand writes a JSON document to --out and a short human
summary to stdout. Exit codes: 0 success, 2 validation/usage error,
1 internal error.
"""

import argparse
import json
import os
import sys

from .data import MultimodalDataset, chronological_split
from .embedding_io import hash_embed_texts, load_embeddings, write_embeddings
from .errors import ValidationError
from .experiment import ExperimentConfig, load_csv, run_experiment
from .metrics import evaluate
from .spectral import CtrConfig, analyze_ctr
from .synthetic import make_synthetic_hidden_driver
from .transport import shuffle_ratio, tt_wasserstein


def _int_list(text):
    return tuple(int(part) for part in text.split(",") if part.strip())


def _write_json(path, payload):
    with open(path, "w") as fh:
        fh.write(payload)
        fh.write("\n")


def _load_dataset(args):
    series, texts = load_csv(args.data, text_column=args.text_col)
    if args.emb is not None:
        embeddings = load_embeddings(args.emb)
    elif args.hash_embed:
        if texts is None:
            raise ValidationError("--hash-embed requires --text-col")
        embeddings = hash_embed_texts(texts, args.hash_dim, args.hash_seed)
    else:
        raise ValidationError("pass --emb FILE or --hash-embed with --text-col")
    split = chronological_split(series.n_steps, (0.7, 0.1, 0.2))
    return MultimodalDataset(series=series, embeddings=embeddings, split=split)


def _add_dataset_args(parser, need_emb=True):
    parser.add_argument("--data", required=True, help="CSV with a header row")
    parser.add_argument("--text-col", default=None, help="name of the text column")
    if need_emb:
        parser.add_argument("--emb", default=None, help="TSEMB1 or CSV embeddings")
        parser.add_argument(
            "--hash-embed",
            action="store_true",
            help="derive embeddings from the text column with the hashing embedder",
        )
        parser.add_argument("--hash-dim", type=int, default=64)
        parser.add_argument("--hash-seed", type=int, default=0)


def _cmd_analyze_ctr(args):
    ds = _load_dataset(args)
    cfg = CtrConfig(nms_radius=args.nms_radius, top_l=args.top, max_lag=args.max_lag)
    report = analyze_ctr(ds, cfg)
    _write_json(args.out, report.to_json(indent=2))
    print(
        f"top-{len(report.top_text_frequencies)} text frequencies: "
        f"{report.matched_count} matched a series peak"
    )
    for (freq, amp), hit in zip(report.top_text_frequencies, report.matched):
        tag = "matched" if hit else "unmatched"
        print(f"  f={freq:.4f} amplitude={amp:.4f} [{tag}]")
    return 0


def _cmd_tt_wasserstein(args):
    ds = _load_dataset(args)
    cfg = CtrConfig(max_lag=args.max_lag)
    if args.shuffles > 0:
        seeds = [args.seed + i for i in range(args.shuffles)]
        report = shuffle_ratio(ds, seeds, cfg)
        _write_json(args.out, report.to_json(indent=2))
        print(
            f"distance={report.original:.6f} "
            f"shuffled-mean={(report.ts_shuffled_mean + report.text_shuffled_mean) / 2:.6f} "
            f"ratio={report.ratio_percent:.1f}%"
        )
    else:
        value = tt_wasserstein(ds, cfg)
        _write_json(args.out, json.dumps({"original": value}, sort_keys=True))
        print(f"distance={value:.6f}")
    return 0


def _experiment_config(args, task):
    return ExperimentConfig(
        task=task,
        model=args.model,
        seq_len=args.seq_len,
        pred_lens=_int_list(args.pred_len) if task == "forecast" else (args.seq_len,),
        d_mapped=args.d_mapped,
        lr=args.lr,
        lr2=args.lr2,
        batch_size=args.batch,
        epochs=args.epochs,
        patience=args.patience,
        seeds=_int_list(args.seeds),
        modes=tuple(args.modes.split(",")),
        missing_ratio=getattr(args, "missing_ratio", 0.25),
        mask_seed=getattr(args, "mask_seed", 0),
        jobs=args.jobs,
    )


def _add_train_args(parser, task):
    parser.add_argument("--model", default="dlinear", choices=("linear", "dlinear", "mlp"))
    parser.add_argument("--seq-len", type=int, default=24)
    if task == "forecast":
        parser.add_argument("--pred-len", default="6,8,10,12",
                            help="comma-separated horizons")
    parser.add_argument("--d-mapped", type=int, default=12)
    parser.add_argument("--lr", type=float, default=1e-4)
    parser.add_argument("--lr2", type=float, default=0.01)
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--patience", type=int, default=20)
    parser.add_argument("--seeds", default="0", help="comma-separated seeds")
    parser.add_argument(
        "--modes",
        default="tats,numerical_only",
        help="comma-separated subset of tats,numerical_only,text_shuffle,text_only_1d",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=int(os.environ.get("TATS_JOBS", "1")),
        help="parallel grid cells (default: TATS_JOBS env var or 1)",
    )


def _cmd_train(args):
    ds = _load_dataset(args)
    cfg = _experiment_config(args, args.task)
    doc = run_experiment(cfg, ds=ds)
    _write_json(args.out, doc.to_json(indent=2))
    for mode, agg in doc.aggregates.items():
        print(f"{mode}: mse={agg['mse']:.4f} mae={agg['mae']:.4f}")
    for mode, promo in doc.promotions.items():
        print(f"promotion[{mode}]: mse={promo['mse']:.1f}% mae={promo['mae']:.1f}%")
    return 0


def _cmd_impute(args):
    args.task = "impute"
    return _cmd_train(args)


def _cmd_evaluate(args):
    pred, _ = load_csv(args.pred)
    target, _ = load_csv(args.target)
    mask = None
    if args.mask is not None:
        mask_series, _ = load_csv(args.mask)
        mask = mask_series.values
    report = evaluate(pred.values, target.values, mask=mask)
    _write_json(args.out, report.to_json(indent=2))
    print(
        f"mse={report.mse:.6f} mae={report.mae:.6f} rmse={report.rmse:.6f} "
        f"mape={report.mape:.3f} mspe={report.mspe:.6f} (n={report.n})"
    )
    return 0


def _cmd_embed_hash(args):
    _, texts = load_csv(args.data, text_column=args.text_col)
    if texts is None:
        raise ValidationError("--text-col is required")
    embeddings = hash_embed_texts(texts, args.d, args.seed)
    write_embeddings(embeddings, args.out)
    print(f"wrote {embeddings.n_steps} x {embeddings.dim} embeddings to {args.out}")
    return 0


def _cmd_synth(args):
    ds = make_synthetic_hidden_driver(args.t, args.seed)
    values = ds.series.values
    with open(args.out, "w") as fh:
        fh.write("t," + ",".join(f"v{i}" for i in range(values.shape[1])) + "\n")
        for i, row in enumerate(values):
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in row) + "\n")
    write_embeddings(ds.embeddings, args.emb_out)
    print(
        f"wrote series ({values.shape[0]} x {values.shape[1]}) to {args.out} and "
        f"embeddings ({ds.embeddings.dim}-dim) to {args.emb_out}"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tats",
        description="Text-augmented time series modeling and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-ctr", help="compare text and series periodicities")
    _add_dataset_args(p)
    p.add_argument("--top", type=int, default=4)
    p.add_argument("--nms-radius", type=int, default=2)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze_ctr)

    p = sub.add_parser("tt-wasserstein", help="spectral transport distance")
    _add_dataset_args(p)
    p.add_argument("--shuffles", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-lag", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tt_wasserstein)

    p = sub.add_parser("train", help="run a forecasting or imputation grid")
    _add_dataset_args(p)
    p.add_argument("--task", default="forecast", choices=("forecast", "impute"))
    p.add_argument("--missing-ratio", type=float, default=0.25)
    p.add_argument("--mask-seed", type=int, default=0)
    _add_train_args(p, "forecast")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("impute", help="run the imputation grid")
    _add_dataset_args(p)
    p.add_argument("--missing-ratio", type=float, default=0.25)
    p.add_argument("--mask-seed", type=int, default=0)
    _add_train_args(p, "impute")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_impute)

    p = sub.add_parser("evaluate", help="score predictions against targets")
    p.add_argument("--pred", required=True, help="CSV of predictions")
    p.add_argument("--target", required=True, help="CSV of targets")
    p.add_argument("--mask", default=None, help="optional CSV 0/1 cell mask")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("embed-hash", help="hash-embed a text column to TSEMB1")
    p.add_argument("--data", required=True)
    p.add_argument("--text-col", required=True)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed_hash)

    p = sub.add_parser("synth", help="generate the hidden-driver benchmark")
    p.add_argument("--t", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path for the series")
    p.add_argument("--emb-out", required=True, help="TSEMB1 path for embeddings")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
