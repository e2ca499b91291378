"""Exact minimax-game evaluation on explicit finite distributions.

Conventions used by this module, fixed once here:

* The adversarial value is accounted per protected group. The real/fake part
  sums, over s in {0, 1}, the group's own two-player game between the
  conditionals p_data(x,y|s) and p_g(x,y|s); the fairness part is the game
  between the two generated conditionals, weighted by lambda. Spelled out:

      V = sum_s sum_xy [ p_data(x,y|s) log D1(x,y,s)
                         + p_g(x,y|s) log(1 - D1(x,y,s)) ]
          + lambda * sum_xy [ p_g(x,y|1) log D2(x,y)
                              + p_g(x,y|0) log(1 - D2(x,y)) ]

  The generator is only admissible with p_g(s) = p_data(s) (it conditions on
  the protected attribute, whose rate it copies from the data), and then the
  V-maximising D1 is exactly the joint-mass ratio
  p_data(x,y,s) / (p_data(x,y,s) + p_g(x,y,s)).

* With optimal discriminators plugged in, V collapses to the closed form

      -(2 + lambda) log 4
        + 2 [ JSD(p_data(.|s=1) || p_g(.|s=1)) + JSD(p_data(.|s=0) || p_g(.|s=0)) ]
        + 2 lambda JSD(p_g(.|s=1) || p_g(.|s=0))

  so the floor over generators is -(2 + lambda) log 4, reached exactly when
  the generator matches the data and its two conditionals coincide.
  fairgan_value always evaluates V both ways and refuses to return if the
  two answers disagree.

* Outcomes carried by neither distribution get discriminator value 0.5; they
  contribute nothing to V either way.

* Natural log everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .metrics import jsd

LOG4 = math.log(4.0)

# 1-D toy mixture used for oracle scenarios: x ~ N(1, var 0.5) for s=1 and
# N(3, var 0.5) for s=0, equal weights, discretised on [-1, 5].
TOY_BINS = 64


@dataclass(frozen=True)
class FinitePmf:
    """Explicit joint distribution over outcomes (x_label, y, s)."""

    outcomes: tuple[tuple, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        object.__setattr__(self, "probabilities", probs)
        if len(self.outcomes) != probs.size:
            raise ValueError("one probability per outcome required")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValueError("outcome labels must be unique")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        for out in self.outcomes:
            if len(out) != 3 or out[1] not in (0, 1) or out[2] not in (0, 1):
                raise ValueError(f"outcome {out!r} is not (x, y in {{0,1}}, s in {{0,1}})")

    @classmethod
    def normalized(cls, outcomes, weights) -> "FinitePmf":
        w = np.asarray(weights, dtype=float)
        if w.sum() <= 0:
            raise ValueError("total weight must be positive")
        return cls(tuple(outcomes), w / w.sum())

    def s_marginal(self) -> dict[int, float]:
        out = {0: 0.0, 1: 0.0}
        for (x, y, s), p in zip(self.outcomes, self.probabilities):
            out[s] += p
        return out

    def xy_support(self) -> tuple[tuple, ...]:
        seen, order = set(), []
        for x, y, s in self.outcomes:
            if (x, y) not in seen:
                seen.add((x, y))
                order.append((x, y))
        return tuple(order)

    def conditional_xy(self, s: int) -> "ConditionalPmf":
        """p(x, y | s) on the pmf's own (x, y) support."""
        mass = self.s_marginal()[s]
        if mass <= 0:
            raise ValueError(f"group s={s} has zero mass")
        support = self.xy_support()
        probs = np.zeros(len(support))
        index = {xy: i for i, xy in enumerate(support)}
        for (x, y, s_i), p in zip(self.outcomes, self.probabilities):
            if s_i == s:
                probs[index[(x, y)]] += p
        return ConditionalPmf(support, probs / mass)


@dataclass(frozen=True)
class ConditionalPmf:
    """A distribution over (x, y) outcomes, used for per-group conditionals."""

    outcomes: tuple[tuple, ...]
    probabilities: np.ndarray


@dataclass(frozen=True)
class GameEvaluation:
    d1_table: np.ndarray  # per joint outcome
    d2_table: np.ndarray  # per (x, y) outcome
    value: float
    jsd_terms: tuple[float, float]  # (data vs generated, s=1 vs s=0)
    delta: float  # value above the -(2 + lambda) log 4 floor


def _check_same_space(a, b) -> None:
    if a.outcomes != b.outcomes:
        raise ValueError("outcome spaces do not match")


def optimal_d1(p_data: FinitePmf, p_g: FinitePmf) -> np.ndarray:
    """Mass-ratio discriminator p_data / (p_data + p_g), 0.5 on dead outcomes."""
    _check_same_space(p_data, p_g)
    a, b = p_data.probabilities, p_g.probabilities
    total = a + b
    out = np.full(a.shape, 0.5)
    live = total > 0
    out[live] = a[live] / total[live]
    return out


def optimal_d2(p_g_s1: ConditionalPmf, p_g_s0: ConditionalPmf) -> np.ndarray:
    """Group-ratio discriminator on generated conditionals, 0.5 on 0/0."""
    _check_same_space(p_g_s1, p_g_s0)
    a, b = p_g_s1.probabilities, p_g_s0.probabilities
    total = a + b
    out = np.full(a.shape, 0.5)
    live = total > 0
    out[live] = a[live] / total[live]
    return out


def _plogd(mass: np.ndarray, d: np.ndarray) -> float:
    """sum mass * log(d) with the 0 * log(anything) = 0 convention."""
    live = mass > 0
    if not live.any():
        return 0.0
    with np.errstate(divide="ignore"):
        terms = mass[live] * np.log(d[live])
    return float(np.sum(terms))


def game_value(
    p_data: FinitePmf,
    p_g: FinitePmf,
    lam: float,
    d1_table: np.ndarray,
    d2_table: np.ndarray,
) -> float:
    """Direct summation of V at arbitrary discriminator tables.

    Outcomes where a log would hit 0 with positive mass contribute -inf,
    which is the honest value of the sum there.
    """
    _check_same_space(p_data, p_g)
    value = 0.0
    support = p_data.xy_support()
    xy_index = {xy: i for i, xy in enumerate(support)}
    for s in (0, 1):
        pd_c = p_data.conditional_xy(s).probabilities
        pg_c = p_g.conditional_xy(s).probabilities
        d1_c = np.full(len(support), 0.5)
        for i, (x, y, s_i) in enumerate(p_data.outcomes):
            if s_i == s:
                d1_c[xy_index[(x, y)]] = d1_table[i]
        value += _plogd(pd_c, d1_c) + _plogd(pg_c, 1.0 - d1_c)
    if lam != 0.0:
        pg1 = p_g.conditional_xy(1).probabilities
        pg0 = p_g.conditional_xy(0).probabilities
        value += lam * (_plogd(pg1, d2_table) + _plogd(pg0, 1.0 - d2_table))
    return value


def fairgan_value(p_data: FinitePmf, p_g: FinitePmf, lam: float) -> GameEvaluation:
    """Evaluate V at the optimal discriminators, two independent ways.

    Direct summation and the JSD closed form must agree within 1e-9 or an
    ArithmeticError is raised. Requires matching outcome spaces and matching
    protected-attribute marginals (the generator copies the data's s rate).
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    _check_same_space(p_data, p_g)
    md, mg = p_data.s_marginal(), p_g.s_marginal()
    if min(md.values()) <= 0:
        raise ValueError("p_data needs both s groups")
    if abs(md[1] - mg[1]) > 1e-9:
        raise ValueError(
            f"generator s-marginal {mg[1]!r} differs from data {md[1]!r}"
        )
    d1 = optimal_d1(p_data, p_g)
    pg1, pg0 = p_g.conditional_xy(1), p_g.conditional_xy(0)
    d2 = optimal_d2(pg1, pg0)
    direct = game_value(p_data, p_g, lam, d1, d2)

    pd1, pd0 = p_data.conditional_xy(1), p_data.conditional_xy(0)
    jsd_data_g = jsd(pd1.probabilities, pg1.probabilities) + jsd(
        pd0.probabilities, pg0.probabilities
    )
    jsd_s1_s0 = jsd(pg1.probabilities, pg0.probabilities)
    closed = -(2.0 + lam) * LOG4 + 2.0 * jsd_data_g + 2.0 * lam * jsd_s1_s0
    if abs(direct - closed) > 1e-9:
        raise ArithmeticError(
            f"direct sum {direct!r} and closed form {closed!r} disagree"
        )
    return GameEvaluation(
        d1_table=d1,
        d2_table=d2,
        value=direct,
        jsd_terms=(jsd_data_g, jsd_s1_s0),
        delta=direct + (2.0 + lam) * LOG4,
    )


# --- three-player baseline with an unconditional generator -------------------


def nfgan2_value(p_data: FinitePmf, p_g_s1: ConditionalPmf, p_g_s0: ConditionalPmf) -> float:
    """Optimal-discriminator criterion of the shuffled-s baseline game.

    In this game the real/fake discriminator sees the unweighted union of
    both protected groups (real and generated alike), so its divergence term
    compares the equal-weight mixtures of the two conditionals; the group
    discriminator term compares the generated conditionals to each other.
    The criterion evaluated here is

        C'(p_g) = -4 log 4
                  + 4 JSD( (p_d1 + p_d0)/2 || (p_g1 + p_g0)/2 )
                  + 2 JSD( p_g1 || p_g0 )

    with -4 log 4 fixed as the game's floor. Both JSD terms are zero exactly
    when each generated conditional equals the data's conditional-mixture
    average, which is therefore the unique global minimiser.
    """
    pd1 = p_data.conditional_xy(1)
    pd0 = p_data.conditional_xy(0)
    if pd1.outcomes != p_g_s1.outcomes or pd0.outcomes != p_g_s0.outcomes:
        raise ValueError("outcome spaces do not match")
    mix_d = 0.5 * (pd1.probabilities + pd0.probabilities)
    mix_g = 0.5 * (p_g_s1.probabilities + p_g_s0.probabilities)
    return (
        -4.0 * LOG4
        + 4.0 * jsd(mix_d, mix_g)
        + 2.0 * jsd(p_g_s1.probabilities, p_g_s0.probabilities)
    )


def nfgan2_value_and_optimum(p_data: FinitePmf):
    """The baseline's optimal generator and the value it attains.

    Returns (optimum, value): both generated conditionals equal the bin-wise
    average of the two data conditionals, and the value is exactly -4 log 4.
    """
    marg = p_data.s_marginal()
    if min(marg.values()) <= 0:
        raise ValueError("p_data needs both s groups")
    pd1 = p_data.conditional_xy(1)
    pd0 = p_data.conditional_xy(0)
    optimum = ConditionalPmf(pd1.outcomes, 0.5 * (pd1.probabilities + pd0.probabilities))
    value = nfgan2_value(p_data, optimum, optimum)
    return optimum, value


# --- toy-scenario helpers -----------------------------------------------------


def _norm_cdf(x: float, mu: float, sigma: float) -> float:
    return 0.5 * (1.0 + math.erf((x - mu) / (sigma * math.sqrt(2.0))))


def toy_pmf(bins: int = TOY_BINS) -> FinitePmf:
    """Discretised two-Gaussian toy mixture as a joint PMF over (bin, 0, s).

    Equal-width bins on [-1, 5]; tail mass is folded into the edge bins, which
    matches a sampler that clips to the range.
    """
    from .data import TOY_HI, TOY_LO, TOY_MEANS, TOY_SIGMA

    edges = np.linspace(TOY_LO, TOY_HI, bins + 1)
    outcomes, weights = [], []
    for s in (1, 0):
        mu = TOY_MEANS[s]
        cdf = [_norm_cdf(e, mu, TOY_SIGMA) for e in edges]
        cdf[0], cdf[-1] = 0.0, 1.0
        for b in range(bins):
            outcomes.append((b, 0, s))
            weights.append(0.5 * (cdf[b + 1] - cdf[b]))
    return FinitePmf.normalized(outcomes, weights)


def histogram_conditionals(x_scaled: np.ndarray, s: np.ndarray, bins: int = TOY_BINS):
    """64-bin histograms of a scaled toy column: overall, s=1 and s=0.

    Input is the encoded (0..1) column; returns three normalized histograms.
    """
    x = np.clip(np.asarray(x_scaled, dtype=float).ravel(), 0.0, 1.0)
    s = np.asarray(s).ravel()
    edges = np.linspace(0.0, 1.0, bins + 1)

    def hist(values):
        if values.size == 0:
            return np.zeros(bins)
        counts, _ = np.histogram(values, bins=edges)
        return counts / counts.sum()

    return hist(x), hist(x[s == 1]), hist(x[s == 0])


# --- scenario files -----------------------------------------------------------


def load_scenario(path):
    """JSON {outcomes: [{x, y, s, p}], lambda} -> (FinitePmf, lambda)."""
    with open(path) as fh:
        doc = json.load(fh)
    outcomes = [(o["x"], int(o["y"]), int(o["s"])) for o in doc["outcomes"]]
    probs = [float(o["p"]) for o in doc["outcomes"]]
    return FinitePmf(tuple(outcomes), np.asarray(probs)), float(doc.get("lambda", 1.0))


def save_evaluation(ev: GameEvaluation, path) -> None:
    doc = {
        "value": ev.value,
        "delta": ev.delta,
        "jsd_data_vs_g": ev.jsd_terms[0],
        "jsd_s1_vs_s0": ev.jsd_terms[1],
        "d1_table": [float(v) for v in ev.d1_table],
        "d2_table": [float(v) for v in ev.d2_table],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
