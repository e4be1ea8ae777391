"""Text-augmented forecasting and imputation.

Per-timestamp text embeddings are projected to a handful of auxiliary
channels by a small MLP, concatenated to the (instance-normalized)
numerical window, and pushed through any base model; only the original
variables' outputs enter the loss, and the projector and base model
train jointly. ``d_mapped=0`` turns the whole apparatus off and leaves
the plain numerical pipeline, which is how the unimodal baseline runs.
"""

import time
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ._base import BaseEstimator
from .data import MultimodalDataset, chronological_split, make_windows
from .errors import EmptyTrainSet, ShapeMismatch
from .models import build_forecaster, build_imputer, count_parameters
from .nn import (
    Adam,
    Mlp,
    instance_denormalize,
    instance_normalize,
    masked_instance_normalize,
    masked_mse_loss,
    mse_loss,
)


def projector_hidden_width(d_mapped):
    return max(4 * d_mapped, 32)


class MlpProjector:
    """Three dense layers mapping d_text down to d_mapped, row-wise."""

    def __init__(self, d_text, d_mapped, rng, dropout=0.1, dropout_rng=None):
        if d_mapped < 1:
            raise ShapeMismatch(f"d_mapped must be >= 1, got {d_mapped}")
        if d_mapped >= d_text:
            raise ShapeMismatch(
                f"projection must reduce dimensionality: d_mapped={d_mapped} "
                f">= d_text={d_text}"
            )
        self.d_text = d_text
        self.d_mapped = d_mapped
        hidden = projector_hidden_width(d_mapped)
        self.net = Mlp(
            [d_text, hidden, hidden, d_mapped],
            rng,
            dropout=dropout,
            dropout_rng=dropout_rng,
            name="projector",
        )
        self._shape = None

    def forward(self, e, training=False):
        e = np.asarray(e, dtype=np.float64)
        squeeze = e.ndim == 2
        batch = e[None] if squeeze else e
        b, l, d = batch.shape
        if d != self.d_text:
            raise ShapeMismatch(f"projector expects width {self.d_text}, got {d}")
        self._shape = (b, l)
        out = self.net.forward(batch.reshape(b * l, d), training=training)
        out = out.reshape(b, l, self.d_mapped)
        return out[0] if squeeze else out

    def backward(self, upstream):
        upstream = np.asarray(upstream, dtype=np.float64)
        batch = upstream[None] if upstream.ndim == 2 else upstream
        b, l = self._shape
        down = self.net.backward(batch.reshape(b * l, self.d_mapped))
        down = down.reshape(b, l, self.d_text)
        return down[0] if upstream.ndim == 2 else down

    def parameters(self):
        return self.net.parameters()


def project(projector, e_window, training=False):
    """Row-wise projection of an embedding window to auxiliary channels."""
    return projector.forward(e_window, training=training)


def augment(x_norm, z):
    """Concatenate auxiliary channels after the original variables."""
    x_norm = np.asarray(x_norm, dtype=np.float64)
    if z is None:
        return x_norm
    z = np.asarray(z, dtype=np.float64)
    if x_norm.shape[:-1] != z.shape[:-1]:
        raise ShapeMismatch(
            f"window lengths disagree: {x_norm.shape} vs {z.shape}"
        )
    return np.concatenate([x_norm, z], axis=-1)


def _seeded_rngs(seed):
    streams = np.random.SeedSequence(seed).spawn(4)
    return tuple(np.random.default_rng(s) for s in streams)


@dataclass
class TrainConfig:
    epochs: int = 50
    patience: int = 20
    lr: float = 1e-4
    lr2: float = 0.01
    batch_size: int = 32
    seed: int = 0


@dataclass
class TrainResult:
    history: List[dict] = field(default_factory=list)
    best_val: float = float("nan")
    epochs_run: int = 0
    epoch_seconds: float = 0.0


class AugmentedForecaster:
    """Projector plus a base forecaster over N + d_mapped channels."""

    def __init__(self, base_kind, seq_len, pred_len, n_variables, d_text,
                 d_mapped=12, dropout=0.1, seed=0, base_options=None):
        self._config = {
            "task": "forecast",
            "base_kind": base_kind,
            "seq_len": seq_len,
            "pred_len": pred_len,
            "n_variables": n_variables,
            "d_text": d_text,
            "d_mapped": d_mapped,
            "dropout": dropout,
            "seed": seed,
            "base_options": dict(base_options) if base_options else None,
        }
        base_rng, proj_rng, drop_rng, self._shuffle_rng = _seeded_rngs(seed)
        self.n_variables = n_variables
        self.d_mapped = d_mapped
        self.seq_len = seq_len
        self.pred_len = pred_len
        if d_mapped > 0:
            self.projector = MlpProjector(
                d_text, d_mapped, proj_rng, dropout=dropout, dropout_rng=drop_rng
            )
        else:
            self.projector = None
        options = dict(base_options or {})
        if base_kind == "mlp":
            options.setdefault("dropout", dropout)
            options.setdefault("dropout_rng", drop_rng)
        self.base = build_forecaster(
            base_kind, seq_len, pred_len, n_variables + d_mapped, base_rng, **options
        )

    def forward_normalized(self, x, e, training=False):
        """Returns (prediction over the original variables, norm state).

        Predictions stay in normalized space; auxiliary channels skip
        normalization because they are outputs of a trained projection.
        """
        x_norm, state = instance_normalize(x)
        z = (
            self.projector.forward(e, training=training)
            if self.projector is not None
            else None
        )
        u = augment(x_norm, z)
        out = self.base.forward(u, training=training)
        return out[..., : self.n_variables], state

    def backward(self, d_pred_norm):
        """Push the loss gradient through base and projector."""
        d_pred_norm = np.asarray(d_pred_norm, dtype=np.float64)
        full = np.zeros(d_pred_norm.shape[:-1] + (self.base.channels,))
        full[..., : self.n_variables] = d_pred_norm
        d_u = self.base.backward(full)
        if self.projector is not None:
            self.projector.backward(d_u[..., self.n_variables :])

    def predict(self, x, e):
        pred_norm, state = self.forward_normalized(x, e, training=False)
        return instance_denormalize(pred_norm, state)

    def parameters(self):
        return self.base_parameters() + self.projector_parameters()

    def base_parameters(self):
        return self.base.parameters()

    def projector_parameters(self):
        return self.projector.parameters() if self.projector is not None else []

    def parameter_counts(self):
        base = count_parameters(self.base_parameters())
        proj = count_parameters(self.projector_parameters())
        return {"base": base, "projector": proj, "total": base + proj}

    def save(self, path):
        save_bundle(self, path)

    @classmethod
    def load(cls, path):
        return load_bundle(path, expected_task="forecast")


class AugmentedImputer:
    """Projector plus a base imputer over N + d_mapped channels."""

    def __init__(self, base_kind, seq_len, n_variables, d_text, d_mapped=12,
                 dropout=0.1, seed=0, base_options=None):
        self._config = {
            "task": "impute",
            "base_kind": base_kind,
            "seq_len": seq_len,
            "n_variables": n_variables,
            "d_text": d_text,
            "d_mapped": d_mapped,
            "dropout": dropout,
            "seed": seed,
            "base_options": dict(base_options) if base_options else None,
        }
        base_rng, proj_rng, drop_rng, self._shuffle_rng = _seeded_rngs(seed)
        self.n_variables = n_variables
        self.d_mapped = d_mapped
        self.seq_len = seq_len
        if d_mapped > 0:
            self.projector = MlpProjector(
                d_text, d_mapped, proj_rng, dropout=dropout, dropout_rng=drop_rng
            )
        else:
            self.projector = None
        options = dict(base_options or {})
        options.setdefault("dropout", dropout)
        options.setdefault("dropout_rng", drop_rng)
        self.base = build_imputer(
            base_kind, seq_len, n_variables + d_mapped, base_rng, **options
        )

    def forward_normalized(self, x, mask, e, training=False):
        """Normalized reconstruction of the original variables.

        Statistics come from observed cells only; missing cells are
        zero-filled before normalization. The mask passed to the base
        marks auxiliary channels fully observed.
        """
        x_norm, state = masked_instance_normalize(x, mask)
        z = (
            self.projector.forward(e, training=training)
            if self.projector is not None
            else None
        )
        u = augment(x_norm, z)
        aug_mask = augment(mask, np.ones_like(z) if z is not None else None)
        out = self.base.forward(u, aug_mask, training=training)
        return out[..., : self.n_variables], state

    def backward(self, d_recon_norm):
        d_recon_norm = np.asarray(d_recon_norm, dtype=np.float64)
        full = np.zeros(d_recon_norm.shape[:-1] + (self.base.channels,))
        full[..., : self.n_variables] = d_recon_norm
        d_u = self.base.backward(full)
        if self.projector is not None:
            self.projector.backward(d_u[..., self.n_variables :])

    def impute(self, x, mask, e):
        """Observed cells pass through; missing cells take the model fill."""
        recon_norm, state = self.forward_normalized(x, mask, e, training=False)
        recon = instance_denormalize(recon_norm, state)
        return mask * x + (1.0 - mask) * recon

    def parameters(self):
        return self.base_parameters() + self.projector_parameters()

    def base_parameters(self):
        return self.base.parameters()

    def projector_parameters(self):
        return self.projector.parameters() if self.projector is not None else []

    def parameter_counts(self):
        base = count_parameters(self.base_parameters())
        proj = count_parameters(self.projector_parameters())
        return {"base": base, "projector": proj, "total": base + proj}

    def save(self, path):
        save_bundle(self, path)

    @classmethod
    def load(cls, path):
        return load_bundle(path, expected_task="impute")


def save_bundle(model, path):
    """Checkpoint bundle: every parameter (base then projector) plus the
    constructor config, in the shared binary checkpoint format."""
    from .nn import save_checkpoint

    named = [(p.name, p.value) for p in model.parameters()]
    save_checkpoint(path, named, meta=model._config)


def load_bundle(path, expected_task=None):
    """Rebuild a saved model and restore its parameters by name."""
    from .nn import load_checkpoint

    named, meta = load_checkpoint(path)
    config = dict(meta)
    task = config.pop("task", None)
    if task not in ("forecast", "impute"):
        raise ShapeMismatch(f"checkpoint has unknown task {task!r}")
    if expected_task is not None and task != expected_task:
        raise ShapeMismatch(
            f"checkpoint holds a {task!r} model, expected {expected_task!r}"
        )
    if config.get("base_options") is not None:
        config["base_options"] = dict(config["base_options"])
    cls = AugmentedForecaster if task == "forecast" else AugmentedImputer
    model = cls(**config)
    params = model.parameters()
    if len(params) != len(named):
        raise ShapeMismatch(
            f"checkpoint has {len(named)} tensors, model expects {len(params)}"
        )
    for p, (name, value) in zip(params, named):
        if p.name != name or p.value.shape != value.shape:
            raise ShapeMismatch(
                f"checkpoint tensor {name} {value.shape} does not match "
                f"parameter {p.name} {p.value.shape}"
            )
        p.value[...] = value
    return model


def _stack_forecast_windows(windows):
    x = np.stack([w.input_series for w in windows])
    e = np.stack([w.input_embeddings for w in windows])
    y = np.stack([w.target for w in windows])
    return x, e, y


def _stack_impute_windows(windows):
    x = np.stack([w.input_series for w in windows])
    e = np.stack([w.input_embeddings for w in windows])
    m = np.stack([w.mask for w in windows])
    return x, e, m


def forecast_loss(model, x, e, y, training=False):
    """Eq-style MSE over the original variables in normalized space."""
    pred_norm, state = model.forward_normalized(x, e, training=training)
    y_norm = (y - state.mean) / state.std
    return mse_loss(pred_norm, y_norm)


def forecast_loss_denormalized(model, x, e, y, training=False):
    """Same chain but the loss reads denormalized predictions."""
    pred_norm, state = model.forward_normalized(x, e, training=training)
    pred = instance_denormalize(pred_norm, state)
    loss, d_pred = mse_loss(pred, y)
    return loss, d_pred * state.std


def impute_loss(model, x, mask, e, training=False):
    """MSE on missing cells only, in normalized space."""
    recon_norm, state = model.forward_normalized(x, mask, e, training=training)
    target_norm = (x - state.mean) / state.std
    return masked_mse_loss(recon_norm, target_norm, 1.0 - mask)


def _snapshot(params):
    return [p.value.copy() for p in params]


def _restore(params, snapshot):
    for p, value in zip(params, snapshot):
        p.value[...] = value


def _train(model, cfg, batch_losses, val_loss):
    """Shared epoch loop with early stopping on validation loss."""
    optimizer = Adam(
        [
            (model.base_parameters(), cfg.lr),
            (model.projector_parameters(), cfg.lr2),
        ]
    )
    params = model.parameters()
    result = TrainResult()
    best = float("inf")
    best_snapshot = _snapshot(params)
    stale = 0
    started = time.perf_counter()
    for _ in range(cfg.epochs):
        losses = batch_losses(optimizer)
        train_loss = float(np.mean(losses))
        val = val_loss()
        result.history.append({"train_loss": train_loss, "val_loss": val})
        result.epochs_run += 1
        if not np.isnan(val) and val < best:
            best = val
            best_snapshot = _snapshot(params)
            stale = 0
        else:
            stale += 1
            if not np.isnan(val) and stale >= cfg.patience:
                break
    if np.isfinite(best):
        _restore(params, best_snapshot)
        result.best_val = best
    elapsed = time.perf_counter() - started
    result.epoch_seconds = elapsed / result.epochs_run if result.epochs_run else 0.0
    return result


def train_forecast(model, train_windows, val_windows, cfg: TrainConfig):
    """Mini-batch joint training of base model and projector.

    The base parameters use ``cfg.lr`` and the projector ``cfg.lr2``; the
    run returns the best-validation checkpoint when validation windows
    exist, otherwise the final parameters.
    """
    if len(train_windows) == 0:
        raise EmptyTrainSet("training requires at least one window")
    x, e, y = _stack_forecast_windows(train_windows)
    if val_windows:
        xv, ev, yv = _stack_forecast_windows(val_windows)
    n = x.shape[0]

    def batch_losses(optimizer):
        order = model._shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            optimizer.zero_grad()
            loss, d_pred = forecast_loss(model, x[idx], e[idx], y[idx], training=True)
            model.backward(d_pred)
            optimizer.step()
            losses.append(loss)
        return losses

    def val_loss():
        if not val_windows:
            return float("nan")
        loss, _ = forecast_loss(model, xv, ev, yv, training=False)
        return loss

    return _train(model, cfg, batch_losses, val_loss)


def train_impute(model, train_windows, val_windows, cfg: TrainConfig):
    """Joint training for reconstruction; loss reads missing cells only."""
    if len(train_windows) == 0:
        raise EmptyTrainSet("training requires at least one window")
    x, e, m = _stack_impute_windows(train_windows)
    if val_windows:
        xv, ev, mv = _stack_impute_windows(val_windows)
    n = x.shape[0]

    def batch_losses(optimizer):
        order = model._shuffle_rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            optimizer.zero_grad()
            loss, d_recon = impute_loss(model, x[idx], m[idx], e[idx], training=True)
            model.backward(d_recon)
            optimizer.step()
            losses.append(loss)
        return losses

    def val_loss():
        if not val_windows:
            return float("nan")
        loss, _ = impute_loss(model, xv, mv, ev, training=False)
        return loss

    return _train(model, cfg, batch_losses, val_loss)


class TatsForecaster(BaseEstimator):
    """Scikit-learn-style wrapper: fit on an aligned (series, embeddings)
    pair, predict a horizon from any (window, embedding window) pair.

    Parameters mirror the training defaults; ``d_mapped=0`` disables the
    text path entirely and trains the numerical-only baseline.
    """

    def __init__(self, base="dlinear", seq_len=24, pred_len=12, d_mapped=12,
                 dropout=0.1, lr=1e-4, lr2=0.01, batch_size=32, epochs=50,
                 patience=20, seed=0, split_ratios=(0.7, 0.1, 0.2),
                 base_options=None):
        self.base = base
        self.seq_len = seq_len
        self.pred_len = pred_len
        self.d_mapped = d_mapped
        self.dropout = dropout
        self.lr = lr
        self.lr2 = lr2
        self.batch_size = batch_size
        self.epochs = epochs
        self.patience = patience
        self.seed = seed
        self.split_ratios = split_ratios
        self.base_options = base_options

    def _dataset(self, X, E):
        from .data import EmbeddingSequence, TimeSeries

        X = np.asarray(X, dtype=np.float64)
        split = chronological_split(X.shape[0], self.split_ratios)
        return MultimodalDataset(
            series=TimeSeries(X), embeddings=EmbeddingSequence(E), split=split
        )

    def fit(self, X, E):
        ds = self._dataset(X, E)
        train = make_windows(ds, self.seq_len, self.pred_len, "train")
        val = make_windows(ds, self.seq_len, self.pred_len, "val")
        return self.fit_windows(
            train, val, n_variables=ds.series.n_variables, d_text=ds.embeddings.dim
        )

    def fit_windows(self, train_windows, val_windows, n_variables, d_text):
        self.model_ = AugmentedForecaster(
            base_kind=self.base,
            seq_len=self.seq_len,
            pred_len=self.pred_len,
            n_variables=n_variables,
            d_text=d_text,
            d_mapped=self.d_mapped,
            dropout=self.dropout,
            seed=self.seed,
            base_options=self.base_options,
        )
        cfg = TrainConfig(
            epochs=self.epochs,
            patience=self.patience,
            lr=self.lr,
            lr2=self.lr2,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        self.train_result_ = train_forecast(self.model_, train_windows, val_windows, cfg)
        self.history_ = self.train_result_.history
        self.n_variables_ = n_variables
        self.d_text_ = d_text
        return self

    def predict(self, X_window, E_window):
        self._check_fitted("model_")
        return self.model_.predict(
            np.asarray(X_window, dtype=np.float64),
            np.asarray(E_window, dtype=np.float64),
        )

    def predict_windows(self, windows):
        self._check_fitted("model_")
        x = np.stack([w.input_series for w in windows])
        e = np.stack([w.input_embeddings for w in windows])
        return self.model_.predict(x, e)

    def save(self, path):
        self._check_fitted("model_")
        self.model_.save(path)


class TatsImputer(BaseEstimator):
    """Scikit-learn-style wrapper around the augmented imputer."""

    def __init__(self, base="mlp", seq_len=24, d_mapped=12, dropout=0.1,
                 lr=1e-4, lr2=0.01, batch_size=32, epochs=50, patience=20,
                 seed=0, split_ratios=(0.7, 0.1, 0.2), base_options=None):
        self.base = base
        self.seq_len = seq_len
        self.d_mapped = d_mapped
        self.dropout = dropout
        self.lr = lr
        self.lr2 = lr2
        self.batch_size = batch_size
        self.epochs = epochs
        self.patience = patience
        self.seed = seed
        self.split_ratios = split_ratios
        self.base_options = base_options

    def fit_windows(self, train_windows, val_windows, n_variables, d_text):
        self.model_ = AugmentedImputer(
            base_kind=self.base,
            seq_len=self.seq_len,
            n_variables=n_variables,
            d_text=d_text,
            d_mapped=self.d_mapped,
            dropout=self.dropout,
            seed=self.seed,
            base_options=self.base_options,
        )
        cfg = TrainConfig(
            epochs=self.epochs,
            patience=self.patience,
            lr=self.lr,
            lr2=self.lr2,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        self.train_result_ = train_impute(self.model_, train_windows, val_windows, cfg)
        self.history_ = self.train_result_.history
        self.n_variables_ = n_variables
        self.d_text_ = d_text
        return self

    def transform(self, X_window, E_window, mask_window):
        self._check_fitted("model_")
        return self.model_.impute(
            np.asarray(X_window, dtype=np.float64),
            np.asarray(mask_window, dtype=np.float64),
            np.asarray(E_window, dtype=np.float64),
        )

    def save(self, path):
        self._check_fitted("model_")
        self.model_.save(path)
