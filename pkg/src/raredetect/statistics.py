"""Test statistics: higher criticism, the log-likelihood ratio and its linearisation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist

_BLOCK = 1024


@dataclass(frozen=True)
class HcValue:
    raw: float
    normalized: float
    argmax_t: float


@dataclass(frozen=True)
class LlrValue:
    value: float
    n_terms: int


def compensated_sum(x):
    """Accurate sum of a large vector.

    Blocks of 1024 terms are summed pairwise by numpy, the block sums are
    then added with ``math.fsum``; this keeps the error at the level of a
    few ulps of the block sums at a fraction of the cost of a full fsum.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size <= _BLOCK:
        return math.fsum(x)
    pad = (-x.size) % _BLOCK
    blocks = np.concatenate([x, np.zeros(pad)]).reshape(-1, _BLOCK).sum(axis=1)
    return math.fsum(blocks)


def hc_normalizers(k):
    """Normalising constants ``(a_k, b_k)`` of the HC null limit."""
    if k < 16:
        raise ValueError(f"HC normalisers need k >= 16, got {k}")
    ll = math.log(math.log(k))
    return math.sqrt(2.0 * ll), 2.0 * ll + 0.5 * math.log(ll) - 0.5 * math.log(math.pi)


def hc_limit_cdf(x):
    """Limit law of the normalised HC statistic, ``exp(-2 exp(-x))``."""
    return np.exp(-2.0 * np.exp(-np.asarray(x, dtype=float)))


def hc_limit_quantile(q):
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    return -math.log(-math.log(q) / 2.0)


def hc_asymptotic_critical(k, alpha):
    """Asymptotic level-alpha critical value for the raw HC statistic.

    Uses the ``1 - alpha`` quantile of the limit law so that the rejection
    region ``{HC > c}`` has asymptotic probability ``alpha``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    a, b = hc_normalizers(k)
    return (hc_limit_quantile(1.0 - alpha) + b) / a


def hc_statistic(pvals, max_t=None):
    """Exact supremum of the standardised empirical process of the p-values.

    The supremum over ``t`` is attained at an order statistic, approached
    from the left or right, so two candidates per order statistic suffice.
    ``max_t`` restricts the supremum to ``t < max_t``.
    """
    p = np.sort(np.asarray(pvals, dtype=float).ravel())
    k = p.size
    if k == 0:
        raise ValueError("hc_statistic needs at least one p-value")
    if p[0] <= 0.0 or p[-1] >= 1.0 or np.isnan(p).any():
        raise ValueError("p-values must lie in (0, 1)")
    i = np.arange(1, k + 1)
    sd = np.sqrt(p * (1.0 - p))
    right = np.abs(i / k - p) / sd
    left = np.abs((i - 1) / k - p) / sd
    cand = np.maximum(right, left)
    if max_t is not None:
        cand = np.where(p < max_t, cand, -np.inf)
        if not np.isfinite(cand).any():
            raise ValueError("no p-value below max_t")
    j = int(np.argmax(cand))  # first maximiser = smallest t
    raw = math.sqrt(k) * float(cand[j])
    if k >= 16:
        a, b = hc_normalizers(k)
        norm = a * raw - b
    else:
        norm = math.nan
    return HcValue(raw=raw, normalized=norm, argmax_t=float(p[j]))


def llr_statistic(model, observations):
    """``T_n = sum log dQ/dP0(Y_i)`` with compensated summation."""
    y = np.asarray(observations, dtype=float)
    if dist.epsilon(model) == 0.0:
        dist._check_support(model, y)
        return LlrValue(0.0, y.size)
    return LlrValue(compensated_sum(dist.log_mixture_ratio(model, y)), y.size)


def zn_statistic(model, observations):
    """``Z_n = sum eps (dmu/dP0(Y_i) - 1)``."""
    y = np.asarray(observations, dtype=float)
    eps = dist.epsilon(model)
    if eps == 0.0:
        dist._check_support(model, y)
        return 0.0
    return compensated_sum(eps * (dist.signal_density_ratio(model, y) - 1.0))
