"""Adversarial tabular generators: gan, nfgan1, nfgan2 and fairgan.

All four share one composite generator (latent net followed by the pretrained
decoder, fine-tuned jointly) and a real/fake discriminator d1. The fairness
variants differ in what d1 sees and whether a second discriminator d2 pushes
the generated protected-group conditionals together:

  gan      d1 over (x, y, s), generator conditioned on s, no d2
  nfgan1   d1 over (x, y) only, unconditional generator, no d2;
           s is attached independently at synthesis time
  nfgan2   d1 over (x, y) with group-balanced real batches, unconditional
           generator, d2 over generated (x, y) halves labelled s=1/s=0
  fairgan  d1 over (x, y, s), generator conditioned on s, d2 over the two
           generated conditionals, weighted by lambda

Training follows a two-phase schedule: phase 1 runs only the d1/generator
steps; phase 2 (fairness-capable variants only) adds the d2 and generator
fairness steps each iteration. With lambda = 0 the d2 machinery is skipped
entirely, so a fairgan run degenerates to the plain conditional gan exactly,
including its random stream.

Both discriminators use minibatch averaging: each input row is fed together
with the mean row of its batch, so the discriminator can compare batch
statistics against what it learned about the data. Without this the
alternating game orbits (the generator chases the discriminator's blind spot
instead of settling); with it, a generated batch whose moments are off is
immediately separable and the generator receives a direct moment-matching
gradient. Checkpointed discriminator nets therefore have twice the nominal
input width.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .autoencoder import AutoencoderModel, ae_input
from .data import EncodedDataset, Schema, build_feature_map, schema_from_dict, schema_to_dict

VARIANTS = ("gan", "nfgan1", "nfgan2", "fairgan")


def conditions_on_s(variant: str) -> bool:
    return variant in ("gan", "fairgan")


def has_d2(variant: str) -> bool:
    return variant in ("nfgan2", "fairgan")


@dataclass(frozen=True)
class TrainConfig:
    phase1_epochs: int
    phase2_epochs: int
    batch: int = 128
    lam: float = 1.0
    noise_dim: int = 100
    lr: float = 0.001
    seed: int = 0
    gen_hidden: tuple[int, ...] = (128, 128)
    disc_hidden: tuple[int, ...] = (256, 128)
    adam_beta1: float = 0.5
    dtype: str = "float64"

    def __post_init__(self):
        if self.batch < 2 or self.batch % 2:
            raise ValueError("batch must be even and >= 2")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)


@dataclass(frozen=True)
class GeneratorGDec:
    g: nn.Mlp  # noise(+s) -> representation
    dec: nn.Mlp  # representation -> d+1 columns, last column is y-hat
    noise_dim: int
    conditions_on_s: bool


@dataclass(frozen=True)
class FairGanModel:
    generator: GeneratorGDec
    d1: nn.Mlp
    d2: nn.Mlp | None
    lam: float
    variant: str
    p_s1: float
    schema: Schema


def init_model(
    d: int, variant: str, ae: AutoencoderModel, cfg: TrainConfig, schema: Schema,
    p_s1: float,
) -> FairGanModel:
    """Fresh networks for one variant; the decoder starts from the autoencoder.

    Component initialisations draw from independent child streams of the
    config seed, so variants sharing a seed share their common components.
    """
    if ae.decoder.out_dim != d + 1:
        raise nn.LayerShapeError(
            f"autoencoder emits {ae.decoder.out_dim} columns, dataset needs {d + 1}"
        )
    ss = np.random.SeedSequence(cfg.seed)
    rng_g, rng_d1, rng_d2, _ = [np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(4)]
    dtype = cfg.np_dtype
    s_dim = 1 if conditions_on_s(variant) else 0
    h = ae.h
    g = nn.init_mlp(
        [cfg.noise_dim + s_dim, *cfg.gen_hidden, h],
        ["relu"] * len(cfg.gen_hidden) + ["tanh"],
        rng_g,
        dtype=dtype,
    )
    dec = nn.Mlp(
        tuple(
            nn.Layer(l.weight.astype(dtype), l.bias.astype(dtype), l.activation)
            for l in ae.decoder.layers
        )
    )
    d1_in = d + 1 + s_dim
    d1 = nn.init_mlp(
        [d1_in, *cfg.disc_hidden, 1],
        ["leaky_relu"] * len(cfg.disc_hidden) + ["sigmoid"],
        rng_d1,
        dtype=dtype,
    )
    d2 = None
    if has_d2(variant):
        d2 = nn.init_mlp(
            [d + 1, *cfg.disc_hidden, 1],
            ["leaky_relu"] * len(cfg.disc_hidden) + ["sigmoid"],
            rng_d2,
            dtype=dtype,
        )
    lam = cfg.lam if variant == "fairgan" else (1.0 if variant == "nfgan2" else 0.0)
    gen = GeneratorGDec(g, dec, cfg.noise_dim, s_dim == 1)
    return FairGanModel(gen, d1, d2, lam, variant, p_s1, schema)


def _gen_forward(gen: GeneratorGDec, z: np.ndarray, s_values: np.ndarray | None):
    if gen.conditions_on_s:
        z = np.hstack([z, np.asarray(s_values, dtype=z.dtype).reshape(-1, 1)])
    code, g_cache = nn.mlp_forward(gen.g, z)
    out, dec_cache = nn.mlp_forward(gen.dec, code)
    return out, g_cache, dec_cache


def generate_batch(model: FairGanModel, s_values, rng: np.random.Generator):
    """Sample z ~ N(0, I) per row and decode; returns (x-hat, y-hat, s-hat).

    For conditioning variants s-hat is exactly the s_values passed in; the
    y-hat column stays a continuous probability (binarised only at synthesis).
    """
    s_values = np.asarray(s_values)
    n = len(s_values)
    dtype = model.generator.dec.layers[0].weight.dtype
    z = rng.standard_normal((n, model.generator.noise_dim)).astype(dtype)
    out, _, _ = _gen_forward(model.generator, z, s_values)
    return out[:, :-1], out[:, -1], s_values


def v1_losses(d1_real: np.ndarray, d1_fake: np.ndarray):
    """Real/fake discriminator loss and the generator's share of it.

    d1_loss = -[mean log D1(real) + mean log(1 - D1(fake))]; the generator
    descends mean log(1 - D1(fake)). Inputs are D1's output probabilities.
    """
    p_real = nn.clamp_probs(np.asarray(d1_real, dtype=float))
    p_fake = nn.clamp_probs(np.asarray(d1_fake, dtype=float))
    d1_loss = -(np.mean(np.log(p_real)) + np.mean(np.log(1.0 - p_fake)))
    gen_part = np.mean(np.log(1.0 - p_fake))
    return float(d1_loss), float(gen_part)


def v2_losses(d2_on_s1: np.ndarray, d2_on_s0: np.ndarray, lam: float):
    """Protected-group discriminator loss on generated samples.

    d2_loss = -[mean over s-hat=1 of log D2 + mean over s-hat=0 of
    log(1 - D2)]; the generator descends -lam * d2_loss (it maximises D2's
    error). Raises if either group is empty.
    """
    p1 = np.atleast_1d(np.asarray(d2_on_s1, dtype=float))
    p0 = np.atleast_1d(np.asarray(d2_on_s0, dtype=float))
    if p1.size == 0 or p0.size == 0:
        raise ValueError("fairness batch needs both s-hat groups")
    p1, p0 = nn.clamp_probs(p1), nn.clamp_probs(p0)
    d2_loss = -(np.mean(np.log(p1)) + np.mean(np.log(1.0 - p0)))
    return float(d2_loss), float(-lam * d2_loss)


class _BalancedSampler:
    """Cycles per-group shuffled index pools; draws m/2 rows from each group."""

    def __init__(self, s: np.ndarray, rng: np.random.Generator):
        self.pools = [np.flatnonzero(s == 0), np.flatnonzero(s == 1)]
        if any(len(p) == 0 for p in self.pools):
            raise ValueError("balanced sampling needs both s groups present")
        self.rng = rng
        self.order = [np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)]
        self.pos = [0, 0]

    def _draw_group(self, g: int, k: int) -> np.ndarray:
        out = []
        while k > 0:
            if self.pos[g] >= len(self.order[g]):
                self.order[g] = self.rng.permutation(self.pools[g])
                self.pos[g] = 0
            take = min(k, len(self.order[g]) - self.pos[g])
            out.append(self.order[g][self.pos[g] : self.pos[g] + take])
            self.pos[g] += take
            k -= take
        return np.concatenate(out)

    def draw(self, m: int) -> np.ndarray:
        return np.concatenate([self._draw_group(1, m // 2), self._draw_group(0, m - m // 2)])


def train(ds: EncodedDataset, variant: str, ae: AutoencoderModel, cfg: TrainConfig):
    """Two-phase minibatch adversarial training; returns (model, loss trace).

    The trace is one dict per epoch with keys epoch, phase, d1_loss, g_loss,
    d2_loss, g_fair. Seeded end-to-end: same config, same result, bit for bit.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if len(ds) == 0:
        raise ValueError("empty dataset")
    d = ds.d
    p_s1 = float(np.mean(ds.s))
    model = init_model(d, variant, ae, cfg, ds.schema, p_s1)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed).spawn(4)[3]))
    dtype = cfg.np_dtype

    g, dec, d1, d2 = model.generator.g, model.generator.dec, model.d1, model.d2
    # beta1=0.5 for every adversarial net: 0.9 momentum overshoots against a
    # moving adversary and the game orbits instead of settling
    b1 = cfg.adam_beta1
    g_state, dec_state = nn.init_adam(g, cfg.lr, b1), nn.init_adam(dec, cfg.lr, b1)
    d1_state = nn.init_adam(d1, cfg.lr, b1)
    d2_state = nn.init_adam(d2, cfg.lr, b1) if d2 is not None else None

    xy = ae_input(ds).astype(dtype)
    s_col = ds.s.astype(dtype).reshape(-1, 1)
    with_s = conditions_on_s(variant)
    real_full = np.hstack([xy, s_col]) if with_s else xy
    n, m = len(ds), cfg.batch
    steps = max(1, -(-n // m))  # ceil
    balanced = _BalancedSampler(ds.s, rng) if variant == "nfgan2" else None
    run_d2 = d2 is not None and model.lam > 0.0

    def make_fake(count, s_fixed=None):
        z = rng.standard_normal((count, cfg.noise_dim)).astype(dtype)
        if with_s:
            s_vals = (
                np.full(count, s_fixed, dtype=dtype)
                if s_fixed is not None
                else (rng.random(count) < p_s1).astype(dtype)
            )
            z = np.hstack([z, s_vals.reshape(-1, 1)])
        code, g_cache = nn.mlp_forward(g, z)
        out, dec_cache = nn.mlp_forward(dec, code)
        fake_in = np.hstack([out, s_vals.reshape(-1, 1)]) if with_s else out
        return out, fake_in, g_cache, dec_cache

    def gen_step_through(disc, disc_cache, dout, g_cache, dec_cache):
        # dout is dLoss/dDiscOutput; chain through the frozen discriminator,
        # drop any s column, then through the decoder and latent net
        nonlocal g, dec, g_state, dec_state
        _, dinput = nn.mlp_backward(disc, disc_cache, dout)
        dec_grads, dcode = nn.mlp_backward(dec, dec_cache, dinput[:, : d + 1])
        g_grads, _ = nn.mlp_backward(g, g_cache, dcode)
        dec, dec_state = nn.adam_step(dec, dec_grads, dec_state)
        g, g_state = nn.adam_step(g, g_grads, g_state)

    trace = []
    epoch_no = 0
    for phase in (1, 2):
        if phase == 2 and not has_d2(variant):
            break
        epochs = cfg.phase1_epochs if phase == 1 else cfg.phase2_epochs
        for _ in range(epochs):
            perm = rng.permutation(n)
            sums = {"d1_loss": 0.0, "g_loss": 0.0, "d2_loss": 0.0, "g_fair": 0.0}
            for step in range(steps):
                if balanced is not None:
                    idx = balanced.draw(m)
                else:
                    idx = perm[step * m : (step + 1) * m]
                real_in = real_full[idx]
                k = len(real_in)

                # d1 ascends log D1(real) + log(1 - D1(fake))
                out_f, fake_in, g_cache, dec_cache = make_fake(k)
                p_real, c_real = nn.mlp_forward(d1, real_in)
                p_fake, c_fake = nn.mlp_forward(d1, fake_in)
                loss_r, grad_r = nn.bce_terms(p_real, np.ones_like(p_real))
                loss_f, grad_f = nn.bce_terms(p_fake, np.zeros_like(p_fake))
                gr, _ = nn.mlp_backward(d1, c_real, grad_r)
                gf, _ = nn.mlp_backward(d1, c_fake, grad_f)
                d1_grads = [(a[0] + b[0], a[1] + b[1]) for a, b in zip(gr, gf)]
                d1, d1_state = nn.adam_step(d1, d1_grads, d1_state)
                sums["d1_loss"] += loss_r + loss_f

                # generator descends mean log(1 - D1(fake)), same fake batch
                p_fake2, c_fake2 = nn.mlp_forward(d1, fake_in)
                pc = nn.clamp_probs(p_fake2)
                sums["g_loss"] += float(np.mean(np.log(1.0 - pc)))
                dout = -1.0 / ((1.0 - pc) * pc.size)
                gen_step_through(d1, c_fake2, dout, g_cache, dec_cache)

                if phase == 2 and run_d2:
                    # one generated batch per group; d2 ascends its objective
                    # scaled by lambda, then the generator descends the same
                    # quantity (maximises d2's error)
                    out1, _, gc1, dc1 = make_fake(m, s_fixed=1.0)
                    out0, _, gc0, dc0 = make_fake(m, s_fixed=0.0)
                    p1, c1 = nn.mlp_forward(d2, out1[:, : d + 1])
                    p0, c0 = nn.mlp_forward(d2, out0[:, : d + 1])
                    d2_loss, _ = v2_losses(p1.ravel(), p0.ravel(), model.lam)
                    l1, g1 = nn.bce_terms(p1, np.ones_like(p1))
                    l0, g0 = nn.bce_terms(p0, np.zeros_like(p0))
                    ga, _ = nn.mlp_backward(d2, c1, model.lam * g1)
                    gb, _ = nn.mlp_backward(d2, c0, model.lam * g0)
                    d2_grads = [(a[0] + b[0], a[1] + b[1]) for a, b in zip(ga, gb)]
                    d2, d2_state = nn.adam_step(d2, d2_grads, d2_state)
                    sums["d2_loss"] += d2_loss

                    p1b, c1b = nn.mlp_forward(d2, out1[:, : d + 1])
                    p0b, c0b = nn.mlp_forward(d2, out0[:, : d + 1])
                    pc1, pc0 = nn.clamp_probs(p1b), nn.clamp_probs(p0b)
                    g_fair = model.lam * float(np.mean(np.log(pc1)) + np.mean(np.log(1 - pc0)))
                    sums["g_fair"] += g_fair
                    gen_step_through(d2, c1b, model.lam / (pc1.size * pc1), gc1, dc1)
                    gen_step_through(d2, c0b, -model.lam / (pc0.size * (1 - pc0)), gc0, dc0)

            epoch_no += 1
            trace.append(
                {"epoch": epoch_no, "phase": phase}
                | {key: val / steps for key, val in sums.items()}
            )

    gen = GeneratorGDec(g, dec, cfg.noise_dim, model.generator.conditions_on_s)
    return FairGanModel(gen, d1, d2, model.lam, variant, p_s1, ds.schema), trace


def synthesize(model: FairGanModel, count: int, rng: np.random.Generator) -> EncodedDataset:
    """Draw a discrete synthetic dataset of ``count`` rows.

    s-hat ~ Bernoulli(p_s1) per row; every categorical block is discretised by
    argmax, y-hat by threshold 0.5, numerics clipped to [0, 1].
    """
    fmap = build_feature_map(model.schema)
    d = fmap[-1][2] if fmap else 0
    s_hat = (rng.random(count) < model.p_s1).astype(np.int64)
    X = np.zeros((count, d))
    y = np.zeros(count, dtype=np.int64)
    chunk = 4096
    for start in range(0, count, chunk):
        idx = slice(start, min(start + chunk, count))
        x_soft, y_soft, _ = generate_batch(model, s_hat[idx], rng)
        block = np.zeros_like(x_soft, dtype=np.float64)
        for attr, lo, hi in fmap:
            if attr.kind == "categorical":
                winners = np.argmax(x_soft[:, lo:hi], axis=1)
                block[np.arange(len(winners)), lo + winners] = 1.0
            else:
                block[:, lo] = np.clip(x_soft[:, lo], 0.0, 1.0)
        X[idx] = block
        y[idx] = (y_soft >= 0.5).astype(np.int64)
    return EncodedDataset(X, y, s_hat, fmap, model.schema)


# --- checkpoints ---------------------------------------------------------


def save_model(model: FairGanModel, path) -> None:
    doc = {
        "variant": model.variant,
        "lambda": model.lam,
        "p_s1": model.p_s1,
        "noise_dim": model.generator.noise_dim,
        "generator": {
            "g": nn.mlp_to_dict(model.generator.g),
            "dec": nn.mlp_to_dict(model.generator.dec),
        },
        "d1": nn.mlp_to_dict(model.d1),
        "schema": schema_to_dict(model.schema),
    }
    if model.d2 is not None:
        doc["d2"] = nn.mlp_to_dict(model.d2)
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path) -> FairGanModel:
    with open(path) as fh:
        doc = json.load(fh)
    variant = doc["variant"]
    gen = GeneratorGDec(
        nn.mlp_from_dict(doc["generator"]["g"]),
        nn.mlp_from_dict(doc["generator"]["dec"]),
        int(doc["noise_dim"]),
        conditions_on_s(variant),
    )
    return FairGanModel(
        generator=gen,
        d1=nn.mlp_from_dict(doc["d1"]),
        d2=nn.mlp_from_dict(doc["d2"]) if "d2" in doc else None,
        lam=float(doc["lambda"]),
        variant=variant,
        p_s1=float(doc["p_s1"]),
        schema=schema_from_dict(doc["schema"]),
    )
