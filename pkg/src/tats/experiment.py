"""Experiment orchestration: CSV ingestion, grid runs over prediction
lengths, seeds and modes, aggregation, and promotion arithmetic.

A grid cell is one trained model; cells are independent and may run in a
process pool. Results serialize to a versioned JSON document whose
non-volatile portion is byte-identical across reruns of the same config.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Optional, Tuple

import numpy as np

from .data import (
    EmbeddingSequence,
    MultimodalDataset,
    TimeSeries,
    WindowSample,
    chronological_split,
    generate_mask,
    make_imputation_windows,
    make_windows,
)
from .errors import MissingColumn, ParseError, ShapeMismatch
from .estimators import TatsForecaster, TatsImputer
from .metrics import evaluate, promotion

MODES = ("tats", "numerical_only", "text_shuffle", "text_only_1d")
TIMESTAMP_COLUMNS = {"t", "time", "date", "timestamp"}
SCHEMA = "tats-results/1"


def load_csv(path, text_column=None):
    """Parse a headered CSV into (TimeSeries, texts-or-None).

    An optional leading column named t/time/date/timestamp supplies
    timestamps when numeric (non-numeric stamps are tolerated but
    dropped); every remaining non-text column must parse as a finite
    float. Rows with missing values are rejected outright - imputation
    is an evaluated task here, never a preprocessing step.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if text_column is not None and text_column not in header:
            raise MissingColumn(f"{path}: no column named {text_column!r}")
        ts_index = None
        if header and header[0].lower() in TIMESTAMP_COLUMNS:
            ts_index = 0
        text_index = header.index(text_column) if text_column is not None else None
        value_indices = [
            i for i in range(len(header)) if i != ts_index and i != text_index
        ]
        if not value_indices:
            raise ParseError(f"{path}: no numeric value columns")
        rows = []
        stamps = []
        texts = [] if text_column is not None else None
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {row_no} has {len(row)} cells, expected "
                    f"{len(header)}",
                    row=row_no,
                )
            values = []
            for i in value_indices:
                cell = row[i].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_no}, column {header[i]!r}: "
                        f"cannot parse {cell!r} as a number",
                        row=row_no,
                        column=header[i],
                    ) from None
                if not math.isfinite(value):
                    raise ParseError(
                        f"{path}: row {row_no}, column {header[i]!r}: "
                        f"non-finite value {cell!r}",
                        row=row_no,
                        column=header[i],
                    )
                values.append(value)
            rows.append(values)
            if ts_index is not None:
                stamps.append(row[ts_index].strip())
            if texts is not None:
                texts.append(row[text_index])
    values = np.asarray(rows, dtype=np.float64)
    timestamps = None
    if ts_index is not None:
        try:
            timestamps = np.asarray([float(s) for s in stamps])
        except ValueError:
            timestamps = None
    series = TimeSeries(values, timestamps=timestamps)
    return series, texts


@dataclass
class ExperimentConfig:
    """Grid definition plus training defaults."""

    task: str = "forecast"
    model: str = "dlinear"
    seq_len: int = 24
    pred_lens: Tuple[int, ...] = (6, 8, 10, 12)
    d_mapped: int = 12
    dropout: float = 0.1
    lr: float = 1e-4
    lr2: float = 0.01
    batch_size: int = 32
    epochs: int = 50
    patience: int = 20
    seeds: Tuple[int, ...] = (0,)
    modes: Tuple[str, ...] = ("tats", "numerical_only")
    split_ratios: Tuple[float, float, float] = (0.7, 0.1, 0.2)
    missing_ratio: float = 0.25
    mask_seed: int = 0
    jobs: int = 1
    base_options: Optional[dict] = None
    # dataset provenance, used by the CLI loader
    data_path: Optional[str] = None
    text_column: Optional[str] = None
    emb_path: Optional[str] = None
    hash_dim: int = 64
    hash_seed: int = 0
    use_hash_embedder: bool = False

    def validate(self):
        if self.task not in ("forecast", "impute"):
            raise ShapeMismatch(f"unknown task {self.task!r}")
        for mode in self.modes:
            if mode not in MODES:
                raise ShapeMismatch(f"unknown mode {mode!r}; choose from {MODES}")
        if not self.seeds:
            raise ShapeMismatch("at least one seed is required")
        if self.task == "forecast" and not self.pred_lens:
            raise ShapeMismatch("at least one prediction length is required")
        return self


def load_dataset_from_config(cfg):
    """Materialize the dataset named by the config's path fields."""
    from .embedding_io import hash_embed_texts, load_embeddings

    if cfg.data_path is None:
        raise ShapeMismatch("config has no data_path")
    series, texts = load_csv(cfg.data_path, text_column=cfg.text_column)
    if cfg.emb_path is not None:
        embeddings = load_embeddings(cfg.emb_path)
    elif cfg.use_hash_embedder:
        if texts is None:
            raise MissingColumn(
                "hash embedder requires --text-col to name a text column"
            )
        embeddings = hash_embed_texts(texts, cfg.hash_dim, cfg.hash_seed)
    else:
        raise ShapeMismatch(
            "no embedding source: pass emb_path or enable the hash embedder"
        )
    split = chronological_split(series.n_steps, cfg.split_ratios)
    return MultimodalDataset(series=series, embeddings=embeddings, split=split)


def _shuffled_embeddings(ds, seed):
    rng = np.random.default_rng([seed, 0x7E577E57])
    perm = rng.permutation(ds.n_steps)
    return MultimodalDataset(
        series=ds.series,
        embeddings=EmbeddingSequence(ds.embeddings.vectors[perm]),
        split=ds.split,
    )


def _surrogate_text_windows(ds, seq_len, pred_len, split):
    """Windows whose input is the first embedding dimension and whose
    target is the first original variable."""
    lo, hi = ds.segment_bounds(split)
    e0 = ds.embeddings.vectors[:, :1]
    x0 = ds.series.values[:, :1]
    emb = ds.embeddings.vectors
    length = seq_len + pred_len
    samples = []
    for s in range(lo, hi - length + 1):
        samples.append(
            WindowSample(
                input_series=e0[s : s + seq_len],
                input_embeddings=emb[s : s + seq_len],
                target=x0[s + seq_len : s + seq_len + pred_len],
                start=s,
            )
        )
    if not samples:
        from .errors import SegmentTooShort

        raise SegmentTooShort(f"segment [{lo}, {hi}) too short for {length}")
    return samples


def _forecast_cell(ds, cfg, pred_len, seed, mode):
    d_mapped = cfg.d_mapped if mode in ("tats", "text_shuffle") else 0
    cell_ds = _shuffled_embeddings(ds, seed) if mode == "text_shuffle" else ds
    if mode == "text_only_1d":
        train = _surrogate_text_windows(cell_ds, cfg.seq_len, pred_len, "train")
        val = _surrogate_text_windows(cell_ds, cfg.seq_len, pred_len, "val")
        test = _surrogate_text_windows(cell_ds, cfg.seq_len, pred_len, "test")
        n_variables = 1
    else:
        train = make_windows(cell_ds, cfg.seq_len, pred_len, "train")
        val = make_windows(cell_ds, cfg.seq_len, pred_len, "val")
        test = make_windows(cell_ds, cfg.seq_len, pred_len, "test")
        n_variables = cell_ds.series.n_variables
    est = TatsForecaster(
        base=cfg.model,
        seq_len=cfg.seq_len,
        pred_len=pred_len,
        d_mapped=d_mapped,
        dropout=cfg.dropout,
        lr=cfg.lr,
        lr2=cfg.lr2,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        patience=cfg.patience,
        seed=seed,
        base_options=cfg.base_options,
    )
    est.fit_windows(train, val, n_variables=n_variables, d_text=cell_ds.embeddings.dim)
    preds = est.predict_windows(test)
    targets = np.stack([w.target for w in test])
    report = evaluate(preds, targets)
    return est, report


def _impute_cell(ds, cfg, seed, mode):
    d_mapped = cfg.d_mapped if mode in ("tats", "text_shuffle") else 0
    cell_ds = _shuffled_embeddings(ds, seed) if mode == "text_shuffle" else ds
    mask = generate_mask(
        cell_ds.series.values.shape, cfg.missing_ratio, cfg.mask_seed + seed
    )
    train = make_imputation_windows(cell_ds, mask, cfg.seq_len, "train")
    val = make_imputation_windows(cell_ds, mask, cfg.seq_len, "val")
    test = make_imputation_windows(cell_ds, mask, cfg.seq_len, "test")
    est = TatsImputer(
        base=cfg.model if cfg.model == "mlp" else "mlp",
        seq_len=cfg.seq_len,
        d_mapped=d_mapped,
        dropout=cfg.dropout,
        lr=cfg.lr,
        lr2=cfg.lr2,
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        patience=cfg.patience,
        seed=seed,
        base_options=cfg.base_options,
    )
    est.fit_windows(train, val, n_variables=cell_ds.series.n_variables,
                    d_text=cell_ds.embeddings.dim)
    x = np.stack([w.input_series for w in test])
    e = np.stack([w.input_embeddings for w in test])
    m = np.stack([w.mask for w in test])
    recon = est.model_.impute(x, m, e)
    report = evaluate(recon, x, mask=1.0 - m)
    return est, report


def run_cell(ds, cfg, pred_len, seed, mode):
    """Train and evaluate one grid cell; returns a plain dict."""
    try:
        if cfg.task == "forecast":
            est, report = _forecast_cell(ds, cfg, pred_len, seed, mode)
        else:
            est, report = _impute_cell(ds, cfg, seed, mode)
    except Exception as exc:
        raise RuntimeError(
            f"cell (pred_len={pred_len}, seed={seed}, mode={mode}) failed: {exc}"
        ) from exc
    counts = est.model_.parameter_counts()
    frac = counts["projector"] / counts["total"] if counts["total"] else 0.0
    return {
        "pred_len": pred_len,
        "seed": seed,
        "mode": mode,
        "metrics": report.to_dict(),
        "epochs_run": est.train_result_.epochs_run,
        "epoch_seconds_mean": est.train_result_.epoch_seconds,
        "params": {**counts, "projector_fraction": frac},
    }


def _cell_worker(args):
    ds, cfg, pred_len, seed, mode = args
    return run_cell(ds, cfg, pred_len, seed, mode)


@dataclass
class ResultsDocument:
    """Versioned result bundle; volatile fields can be stripped."""

    config: dict
    cells: list
    aggregates: dict
    promotions: dict
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    def to_dict(self, include_volatile=True):
        cells = []
        for cell in self.cells:
            cell = dict(cell)
            if not include_volatile:
                cell.pop("epoch_seconds_mean", None)
            cells.append(cell)
        config = dict(self.config)
        if not include_volatile:
            # worker count is an execution detail: results are identical
            # for any jobs value, and the canonical form reflects that
            config.pop("jobs", None)
        doc = {
            "schema": SCHEMA,
            "config": config,
            "cells": cells,
            "aggregates": self.aggregates,
            "promotions": self.promotions,
        }
        if include_volatile:
            doc["created_at"] = self.created_at
        return doc

    def to_json(self, include_volatile=True, **kwargs):
        return json.dumps(
            self.to_dict(include_volatile=include_volatile), sort_keys=True, **kwargs
        )


def run_experiment(cfg, ds=None):
    """Run the full (pred_len x seed x mode) grid and aggregate.

    Aggregates average each metric over every cell of a mode; promotions
    compare each mode's aggregate against the numerical-only aggregate,
    as percentage error reduction.
    """
    cfg.validate()
    if ds is None:
        ds = load_dataset_from_config(cfg)
    pred_lens = tuple(cfg.pred_lens) if cfg.task == "forecast" else (cfg.seq_len,)
    grid = [
        (pred_len, seed, mode)
        for mode in cfg.modes
        for pred_len in pred_lens
        for seed in cfg.seeds
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(
                pool.map(_cell_worker, [(ds, cfg, *cell) for cell in grid])
            )
    else:
        results = [run_cell(ds, cfg, *cell) for cell in grid]
    order = {cell: i for i, cell in enumerate(sorted(grid))}
    results.sort(key=lambda r: order[(r["pred_len"], r["seed"], r["mode"])])
    aggregates = {}
    for mode in cfg.modes:
        mode_cells = [r for r in results if r["mode"] == mode]
        aggregates[mode] = {
            key: float(np.mean([c["metrics"][key] for c in mode_cells]))
            for key in ("mse", "mae", "rmse", "mape", "mspe")
        }
    promotions = {}
    if "numerical_only" in aggregates:
        base = aggregates["numerical_only"]
        for mode in cfg.modes:
            if mode == "numerical_only":
                continue
            promotions[mode] = {
                "mse": promotion(base["mse"], aggregates[mode]["mse"]),
                "mae": promotion(base["mae"], aggregates[mode]["mae"]),
            }
    return ResultsDocument(
        config=asdict(cfg),
        cells=results,
        aggregates=aggregates,
        promotions=promotions,
    )
