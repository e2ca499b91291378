"""Autoencoder pretraining so the decoder can map representations to samples.

The autoencoder reconstructs the [X | y] matrix (unprotected features plus
the decision column), which is exactly what the adversarial generator later
emits; the decoder's weights seed the generator's output stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import nn
from .data import EncodedDataset

DEFAULT_HIDDEN = 128
DEFAULT_BATCH = 128


@dataclass(frozen=True)
class AutoencoderModel:
    encoder: nn.Mlp  # d -> h, tanh
    decoder: nn.Mlp  # h -> d, sigmoid
    h: int


def reconstruction_loss(x: np.ndarray, x_rec: np.ndarray):
    """Mean over rows of the squared Euclidean reconstruction error.

    Returns (loss, grad wrt x_rec).
    """
    x = np.asarray(x, dtype=float)
    x_rec = np.asarray(x_rec, dtype=float)
    if x.shape != x_rec.shape:
        raise nn.LayerShapeError(f"shape mismatch {x.shape} vs {x_rec.shape}")
    n = x.shape[0]
    diff = x_rec - x
    loss = float(np.sum(diff * diff) / n)
    return loss, 2.0 * diff / n


def ae_input(ds: EncodedDataset) -> np.ndarray:
    """The matrix the autoencoder reconstructs: X with y appended."""
    return np.hstack([ds.X, ds.y.reshape(-1, 1).astype(ds.X.dtype)])


def init_autoencoder(d: int, h: int, rng, dtype=np.float64) -> AutoencoderModel:
    encoder = nn.init_mlp([d, h], ["tanh"], rng, dtype=dtype)
    decoder = nn.init_mlp([h, d], ["sigmoid"], rng, dtype=dtype)
    return AutoencoderModel(encoder, decoder, h)


def pretrain(
    ds: EncodedDataset,
    epochs: int,
    batch: int = DEFAULT_BATCH,
    rng: np.random.Generator | None = None,
    h: int = DEFAULT_HIDDEN,
    lr: float = 0.001,
    dtype=np.float64,
):
    """Adam on the reconstruction loss over shuffled minibatches.

    Returns (AutoencoderModel, per-epoch mean loss trace).
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if len(ds) == 0:
        raise ValueError("empty dataset")
    if rng is None:
        rng = nn.make_rng(0)
    data = ae_input(ds).astype(dtype)
    n, d = data.shape
    model = init_autoencoder(d, h, rng, dtype=dtype)
    enc, dec = model.encoder, model.decoder
    enc_state, dec_state = nn.init_adam(enc, lr), nn.init_adam(dec, lr)
    trace = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        epoch_loss, seen = 0.0, 0
        for start in range(0, n, batch):
            xb = data[perm[start : start + batch]]
            code, enc_cache = nn.mlp_forward(enc, xb)
            rec, dec_cache = nn.mlp_forward(dec, code)
            loss, dloss = reconstruction_loss(xb, rec)
            dec_grads, dcode = nn.mlp_backward(dec, dec_cache, dloss)
            enc_grads, _ = nn.mlp_backward(enc, enc_cache, dcode)
            dec, dec_state = nn.adam_step(dec, dec_grads, dec_state)
            enc, enc_state = nn.adam_step(enc, enc_grads, enc_state)
            epoch_loss += loss * len(xb)
            seen += len(xb)
        trace.append(epoch_loss / seen)
    return AutoencoderModel(enc, dec, h), trace


def save_autoencoder(model: AutoencoderModel, path) -> None:
    doc = {
        "encoder": nn.mlp_to_dict(model.encoder),
        "decoder": nn.mlp_to_dict(model.decoder),
        "h": model.h,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_autoencoder(path) -> AutoencoderModel:
    with open(path) as fh:
        doc = json.load(fh)
    return AutoencoderModel(
        nn.mlp_from_dict(doc["encoder"]), nn.mlp_from_dict(doc["decoder"]), int(doc["h"])
    )
