"""
Signal-aware DPO objective and pass@k.

The kernel works on per-token log-probabilities supplied by a trainer: the
policy and reference log-probs of the preferred (w) and dispreferred (l)
samples, plus boolean masks selecting the contrast-signal tokens. Only
masked tokens enter the log-ratio sums.

    margin = beta * sum_w(policy - ref) - beta * sum_l(policy - ref)
    loss   = -log sigmoid(margin) = softplus(-margin)
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from rtl.services.errors import SalvkitError

logger = logging.getLogger(__name__)

DEFAULT_BETA = 0.1
FD_STEP = 1e-6


class DpoMathError(SalvkitError):
    pass


class LengthMismatch(DpoMathError):
    pass


class EmptyMask(DpoMathError):
    pass


class DomainError(DpoMathError):
    pass


@dataclass(frozen=True)
class DpoBatch:
    w_policy_logps: Sequence[float]
    w_ref_logps: Sequence[float]
    l_policy_logps: Sequence[float]
    l_ref_logps: Sequence[float]
    w_mask: Sequence[bool]
    l_mask: Sequence[bool]
    beta: float = DEFAULT_BETA

    @classmethod
    def from_json(cls, data: dict) -> "DpoBatch":
        fields = ("w_policy_logps", "w_ref_logps", "l_policy_logps", "l_ref_logps", "w_mask", "l_mask")
        missing = [f for f in fields if f not in data]
        if missing:
            raise DomainError(f"batch is missing {', '.join(missing)}")
        return cls(
            *[list(data[f]) for f in fields],
            beta=float(data.get("beta", DEFAULT_BETA)),
        )

    @classmethod
    def load(cls, path) -> "DpoBatch":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))

    def to_json(self) -> dict:
        return {
            "w_policy_logps": [float(x) for x in self.w_policy_logps],
            "w_ref_logps": [float(x) for x in self.w_ref_logps],
            "l_policy_logps": [float(x) for x in self.l_policy_logps],
            "l_ref_logps": [float(x) for x in self.l_ref_logps],
            "w_mask": [bool(x) for x in self.w_mask],
            "l_mask": [bool(x) for x in self.l_mask],
            "beta": self.beta,
        }


@dataclass(frozen=True)
class RewardStats:
    chosen_reward: float
    rejected_reward: float
    margin: float

    @property
    def accurate(self) -> bool:
        return self.chosen_reward > self.rejected_reward


@dataclass(frozen=True)
class PassAtKInput:
    n: int
    c: int
    k: int

    def validate(self):
        if not 0 <= self.c <= self.n:
            raise DomainError(f"need 0 <= c <= n, got c={self.c}, n={self.n}")
        if not 1 <= self.k <= self.n:
            raise DomainError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def sigmoid(x: float) -> float:
    if x >= 0:
        e = math.exp(-x)
        return 1.0 / (1.0 + e)
    e = math.exp(x)
    return e / (1.0 + e)


def _arrays(policy, reference, mask):
    p = np.asarray(policy, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if p.ndim != 1 or not p.shape == r.shape == m.shape:
        raise LengthMismatch(f"lengths differ: policy {p.size}, reference {r.size}, mask {m.size}")
    if not m.any():
        raise EmptyMask("mask selects no tokens")
    return p, r, m


def masked_logratio(policy, reference, mask) -> float:
    """Sum of policy - reference over masked positions."""
    p, r, m = _arrays(policy, reference, mask)
    return float(np.sum(p[m] - r[m]))


def _checked(batch: DpoBatch):
    if not (batch.beta > 0 and math.isfinite(batch.beta)):
        raise DomainError(f"beta must be positive, got {batch.beta}")
    w = _arrays(batch.w_policy_logps, batch.w_ref_logps, batch.w_mask)
    l = _arrays(batch.l_policy_logps, batch.l_ref_logps, batch.l_mask)
    for name, values in (("w_policy", w[0]), ("w_ref", w[1]), ("l_policy", l[0]), ("l_ref", l[1])):
        if not np.all(np.isfinite(values)) or np.any(values > 0):
            raise DomainError(f"{name} log-probabilities must be finite and <= 0")
    return w, l


def _margin(beta: float, w, l) -> float:
    (wp, wr, wm), (lp, lr, lm) = w, l
    return beta * float(np.sum(wp[wm] - wr[wm])) - beta * float(np.sum(lp[lm] - lr[lm]))


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def salv_dpo_loss(batch: DpoBatch) -> tuple[float, float]:
    """(loss, margin) for one pair."""
    w, l = _checked(batch)
    margin = _margin(batch.beta, w, l)
    return softplus(-margin), margin


def salv_dpo_grad(batch: DpoBatch) -> tuple[np.ndarray, np.ndarray]:
    """d loss / d policy log-probs for the w and l samples; zero off-mask."""
    w, l = _checked(batch)
    margin = _margin(batch.beta, w, l)
    scale = batch.beta * sigmoid(-margin)
    d_w = np.where(w[2], -scale, 0.0)
    d_l = np.where(l[2], scale, 0.0)
    return d_w, d_l


def reward_stats(batch: DpoBatch) -> RewardStats:
    w, l = _checked(batch)
    chosen = batch.beta * float(np.sum(w[0][w[2]] - w[1][w[2]]))
    rejected = batch.beta * float(np.sum(l[0][l[2]] - l[1][l[2]]))
    return RewardStats(chosen, rejected, chosen - rejected)


def mean_loss(batches: Iterable[DpoBatch]) -> float:
    losses = [salv_dpo_loss(b)[0] for b in batches]
    if not losses:
        raise DomainError("no batches to average")
    return float(np.mean(losses))


def gradient_check(batch: DpoBatch, h: float = FD_STEP) -> float:
    """
    Largest relative error between the analytic gradient and central
    differences of the loss, over every policy log-prob of both samples.
    """
    w, l = _checked(batch)
    d_w, d_l = salv_dpo_grad(batch)
    beta = batch.beta
    worst = 0.0
    for side, analytic in ((0, d_w), (1, d_l)):
        for t in range(analytic.size):
            arrays = [list(w), list(l)]
            policy = arrays[side][0]
            plus, minus = policy.copy(), policy.copy()
            plus[t] += h
            minus[t] -= h
            arrays[side][0] = plus
            up = softplus(-_margin(beta, *arrays))
            arrays[side][0] = minus
            down = softplus(-_margin(beta, *arrays))
            fd = (up - down) / (2 * h)
            an = float(analytic[t])
            denom = max(abs(an), abs(fd))
            if denom:
                worst = max(worst, abs(an - fd) / denom)
    return worst


# ---------------------------------------------------------------------------
# pass@k
# ---------------------------------------------------------------------------

def pass_at_k(n: int, c: int, k: int) -> float:
    """1 - C(n-c, k) / C(n, k) via the stable product form."""
    PassAtKInput(n, c, k).validate()
    if n - c < k:
        return 1.0
    return float(1.0 - np.prod(1.0 - k / np.arange(n - c + 1, n + 1)))


def pass_at_k_exact(n: int, c: int, k: int) -> Fraction:
    PassAtKInput(n, c, k).validate()
    return 1 - Fraction(math.comb(n - c, k), math.comb(n, k))


def mean_pass_at_k(results: Iterable, k: int) -> float:
    """Average over problems; results are (n, c) pairs."""
    values = [pass_at_k(int(n), int(c), k) for n, c in results]
    if not values:
        raise DomainError("no problems to average")
    return float(np.mean(values))
