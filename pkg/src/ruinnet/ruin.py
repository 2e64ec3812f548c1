"""Monte-Carlo estimation of group ruin probabilities.

Per network realisation the group's ruin behaviour is summarised by the
network Pollaczek-Khintchine ratio

    P = lam * (number of connected objects) / (sum over connected j of c_j/mu_j)

with the convention 0/0 := 0.  A realisation with ``P >= 1`` implies
certain group ruin; with ``P < 1`` the group ruins with probability
``P * exp(-(1-P) * U / r)`` where ``U`` is the group's total reserve and
``r`` the proportional-weight scaling constant.  Averaging that summand
over network replicates estimates the group ruin probability, and the
frequency of ``P < 1`` estimates the tail probability driving the phase
transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import netgen
from .model import AgentSubset, RiskParams, proportional_r
from .netgen import BlockModel
from .streams import RUIN_DOMAIN, map_blocks, pairwise_sum, stream

#: Memory cap (floats) for one vectorised chunk of full-graph sampling.
_GRAPH_CHUNK_FLOATS = 1 << 22


@dataclass(frozen=True)
class PKSample:
    """One draw of the Pollaczek-Khintchine ratio with its estimator summand."""

    value: float
    summand: float
    connected_count: int

    def __post_init__(self):
        if (self.value == 0.0) != (self.connected_count == 0):
            raise ValueError("value must be 0 exactly when no object is connected")
        if not 0.0 <= self.summand <= 1.0:
            raise ValueError("summand must lie in [0, 1]")


@dataclass(frozen=True)
class EstimateWithCI:
    """Monte-Carlo estimate with its standard error.

    Attributes:
        mean: The estimate.
        stderr: Standard error of the mean.
        replicates: Number of Monte-Carlo replicates.
    """

    mean: float
    stderr: float
    replicates: int

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("standard error must be nonnegative")

    @property
    def halfwidth(self) -> float:
        """Reporting convention: plus/minus two standard errors."""
        return 2.0 * self.stderr


def pk_value(indicators, params: RiskParams) -> float:
    """Pollaczek-Khintchine ratio for one realised indicator vector."""
    ind = np.asarray(indicators, dtype=bool)
    if ind.size != params.d:
        raise ValueError("indicator length does not match object count")
    n = int(ind.sum())
    if n == 0:
        return 0.0
    return float(params.lam * n / (params.c[ind] / params.mu[ind]).sum())


def psi_summand(pk: float, r_q: float, total_reserve: float) -> float:
    """One replicate's contribution to the ruin-probability estimator.

    ``pk * exp(-(1 - pk) * total_reserve / r_q)`` below 1, and 1 from 1
    upward (a realisation at or above 1 is certain ruin).  Continuous at
    ``pk = 1``.
    """
    if not r_q > 0:
        raise ValueError("r_q must be positive")
    if total_reserve < 0:
        raise ValueError("total reserve must be nonnegative")
    if pk < 0:
        raise ValueError("pk must be nonnegative")
    if pk >= 1.0:
        return 1.0
    return pk * math.exp(-(1.0 - pk) * total_reserve / r_q)


def pk_sample(indicators, params: RiskParams, r_q: float, total_reserve: float) -> PKSample:
    """Bundle one indicator realisation into a :class:`PKSample`."""
    ind = np.asarray(indicators, dtype=bool)
    value = pk_value(ind, params)
    return PKSample(
        value=value,
        summand=psi_summand(value, r_q, total_reserve),
        connected_count=int(ind.sum()),
    )


def _premium_classes(params: RiskParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partition objects into classes of identical (c_j, mu_j) pairs."""
    keys = np.stack([params.c, params.mu], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sizes = np.bincount(inverse, minlength=uniq.shape[0])
    return uniq[:, 0], uniq[:, 1], sizes.astype(np.int64)


def _collapsed_sampler(params: RiskParams, model: BlockModel, group: AgentSubset):
    """Per-class binomial sampler of the PK ratio (one-type models only)."""
    c_cls, mu_cls, sizes = _premium_classes(params)
    rate_cls = c_cls / mu_cls

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        counts = netgen.sample_group_counts(model, group.size, sizes, rng, n)
        total = counts.sum(axis=1)
        denom = counts @ rate_cls
        out = np.zeros(n)
        np.divide(params.lam * total, denom, out=out, where=total > 0)
        return out

    return draw


def _graph_sampler(params: RiskParams, model: BlockModel, group: AgentSubset):
    """PK-ratio sampler through the full type + graph + indicator pipeline."""
    rows = group.zero_based()
    rate = params.c / params.mu
    per_rep = max(1, params.q * params.d)
    chunk_cap = max(1, _GRAPH_CHUNK_FLOATS // per_rep)

    def draw(rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty(n)
        done = 0
        while done < n:
            m = min(chunk_cap, n - done)
            s = netgen._draw_types(rng, model.w, (m, params.q))
            t = netgen._draw_types(rng, model.v, (m, params.d))
            pm = model.p[s[:, :, None], t[:, None, :]]
            edges = rng.random((m, params.q, params.d)) < pm
            ind = edges[:, rows, :].any(axis=1)
            total = ind.sum(axis=1)
            denom = ind @ rate
            vals = np.zeros(m)
            np.divide(params.lam * total, denom, out=vals, where=total > 0)
            out[done : done + m] = vals
            done += m
        return out

    return draw


def _make_sampler(params: RiskParams, model: BlockModel, group: AgentSubset, method: str):
    if method == "auto":
        method = "collapsed" if model.is_bernoulli else "graph"
    if method == "collapsed":
        return _collapsed_sampler(params, model, group)
    if method == "graph":
        return _graph_sampler(params, model, group)
    raise ValueError(f"unknown sampling method {method!r}")


def _run_replicates(
    sampler,
    transform: Callable[[np.ndarray], np.ndarray],
    B: int,
    base_seed: int,
    threads: int,
) -> tuple[float, float]:
    """Total and total-of-squares of ``transform(pk)`` over ``B`` replicates.

    Each block draws from its own stream and both totals are pairwise-tree
    sums in replicate order, so the result is independent of scheduling.
    """

    def work(k: int, lo: int, hi: int):
        rng = stream(base_seed, RUIN_DOMAIN, k)
        vals = transform(sampler(rng, hi - lo))
        return pairwise_sum(vals), pairwise_sum(vals * vals)

    parts = map_blocks(B, work, threads)
    total = pairwise_sum([p[0] for p in parts])
    total_sq = pairwise_sum([p[1] for p in parts])
    return total, total_sq


def estimate_psi(
    params: RiskParams,
    model: BlockModel,
    group: AgentSubset,
    B: int,
    base_seed: int,
    threads: int = 1,
    method: str = "auto",
) -> EstimateWithCI:
    """Monte-Carlo estimate of the group ruin probability.

    Each replicate resamples the full network (types and edges), computes
    the PK ratio, and contributes :func:`psi_summand`.  Output is
    bit-identical for fixed ``(base_seed, B)`` regardless of ``threads``.

    Args:
        params: Risk parameters; the group's total reserve must be positive.
        model: Network model.
        group: Agent group.
        B: Replicate count, at least 2.
        base_seed: Base seed of the replicate streams.
        threads: Worker threads (does not affect the result).
        method: ``auto`` | ``collapsed`` | ``graph`` sampling backend.

    Raises:
        ValueError: On ``B < 2`` or zero total reserve.
    """
    group.validate_for(params.q)
    if B < 2:
        raise ValueError("need at least two replicates for a standard error")
    total_reserve = float(params.u[group.zero_based()].sum())
    if not total_reserve > 0:
        raise ValueError("total reserve must be positive")
    decay = total_reserve / proportional_r(params, group)

    def transform(pk: np.ndarray) -> np.ndarray:
        capped = np.minimum(pk, 1.0)
        return np.where(pk >= 1.0, 1.0, capped * np.exp(-(1.0 - capped) * decay))

    sampler = _make_sampler(params, model, group, method)
    total, total_sq = _run_replicates(sampler, transform, B, base_seed, threads)
    mean = total / B
    var = max(0.0, (total_sq - B * mean * mean) / (B - 1))
    return EstimateWithCI(mean=mean, stderr=math.sqrt(var / B), replicates=int(B))


def estimate_tail(
    params: RiskParams,
    model: BlockModel,
    group: AgentSubset,
    B: int,
    base_seed: int,
    threads: int = 1,
    method: str = "auto",
) -> EstimateWithCI:
    """Monte-Carlo frequency of realisations with PK ratio below 1.

    A disconnected group has ratio 0 and counts toward the event.  The
    standard error is the binomial ``sqrt(phat*(1-phat)/B)``.
    """
    group.validate_for(params.q)
    if B < 2:
        raise ValueError("need at least two replicates for a standard error")

    def transform(pk: np.ndarray) -> np.ndarray:
        return (pk < 1.0).astype(np.float64)

    sampler = _make_sampler(params, model, group, method)
    total, _ = _run_replicates(sampler, transform, B, base_seed, threads)
    phat = total / B
    return EstimateWithCI(
        mean=phat, stderr=math.sqrt(phat * (1.0 - phat) / B), replicates=int(B)
    )
