"""Direct simulation of compound-Poisson surplus paths.

Serves as a brute-force oracle for the ruin estimators: claims for each
object arrive as a Poisson process and are exponentially sized, the group
deficit is the weighted sum of object losses minus premium inflow, and
ruin is the deficit reaching the group's total reserve.

Between claim epochs the deficit strictly decreases whenever the group
carries any exposure, so checking ruin only at claim epochs is exact.
The finite horizon truncates late ruin events, making every frequency
reported here a lower bound on the infinite-horizon probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AgentSubset, RiskParams, WeightMatrix, build_weights
from .netgen import BipartiteGraph, BlockModel, sample_graph, sample_types
from .ruin import EstimateWithCI
from .streams import (
    ORACLE_NET_DOMAIN,
    ORACLE_PATH_DOMAIN,
    PATH_DOMAIN,
    StreamKey,
    map_indexed,
    pairwise_sum,
    stream,
)

#: Claims are drawn in fixed chunks so that extending the horizon replays
#: the same claim prefix (keeps ruin monotone in the horizon per seed).
_CLAIM_CHUNK = 256


@dataclass(frozen=True)
class PathConfig:
    """A fixed network instance to simulate paths on."""

    params: RiskParams
    graph: BipartiteGraph
    group: AgentSubset
    weights: WeightMatrix
    horizon: float = 1000.0
    replicates: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be finite and positive")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.graph.q != self.params.q or self.graph.d != self.params.d:
            raise ValueError("graph dimensions do not match parameters")
        self.group.validate_for(self.params.q)


def _claims_upto(
    rng: np.random.Generator, lam: float, mu_j: float, horizon: float
) -> tuple[np.ndarray, np.ndarray]:
    """Claim epochs and sizes on [0, horizon], inverse-CDF sampled in chunks."""
    times = []
    sizes = []
    t = 0.0
    while True:
        gaps = -np.log1p(-rng.random(_CLAIM_CHUNK)) / lam
        amounts = -mu_j * np.log1p(-rng.random(_CLAIM_CHUNK))
        epochs = t + np.cumsum(gaps)
        inside = epochs <= horizon
        if inside.all():
            times.append(epochs)
            sizes.append(amounts)
            t = float(epochs[-1])
        else:
            keep = int(inside.sum())
            times.append(epochs[:keep])
            sizes.append(amounts[:keep])
            break
    return np.concatenate(times), np.concatenate(sizes)


def simulate_ruin_path(cfg: PathConfig, key: StreamKey) -> bool:
    """Simulate one surplus path; True iff the group deficit ever reaches
    the total reserve within the horizon.

    Claims for object ``j`` come from the sub-stream ``key.child(j)``, so
    each (replicate, object) pair owns its own stream.
    """
    rows = cfg.group.zero_based()
    exposure = cfg.weights.A[rows].sum(axis=0)
    total_reserve = float(cfg.params.u[rows].sum())
    if total_reserve <= 0.0:
        return True  # deficit starts at zero: ruin at time zero
    active = np.flatnonzero(exposure > 0)
    if active.size == 0:
        return False
    drift = float((exposure[active] * cfg.params.c[active]).sum())

    if active.size == 1:
        # Single exposed object: scan chunk by chunk and stop at first ruin.
        j = int(active[0])
        rng = key.child(j).generator()
        a = float(exposure[j])
        t = 0.0
        cum_jumps = 0.0
        while True:
            gaps = -np.log1p(-rng.random(_CLAIM_CHUNK)) / cfg.params.lam
            amounts = -cfg.params.mu[j] * np.log1p(-rng.random(_CLAIM_CHUNK))
            epochs = t + np.cumsum(gaps)
            keep = int((epochs <= cfg.horizon).sum())
            deficit = cum_jumps + np.cumsum(a * amounts[:keep]) - drift * epochs[:keep]
            if (deficit >= total_reserve).any():
                return True
            if keep < _CLAIM_CHUNK:
                return False
            cum_jumps += float((a * amounts).sum())
            t = float(epochs[-1])

    all_times = []
    all_jumps = []
    for j in active:
        rng = key.child(int(j)).generator()
        epochs, amounts = _claims_upto(rng, cfg.params.lam, float(cfg.params.mu[j]), cfg.horizon)
        all_times.append(epochs)
        all_jumps.append(exposure[j] * amounts)
    times = np.concatenate(all_times)
    jumps = np.concatenate(all_jumps)
    if times.size == 0:
        return False
    order = np.argsort(times, kind="stable")
    deficit = np.cumsum(jumps[order]) - drift * times[order]
    return bool((deficit >= total_reserve).any())


def ruin_frequency(cfg: PathConfig, base_seed: int, threads: int = 1) -> EstimateWithCI:
    """Fraction of ruined paths over ``cfg.replicates`` independent paths."""
    root = StreamKey(int(base_seed), (PATH_DOMAIN,))

    def one(r: int) -> float:
        return float(simulate_ruin_path(cfg, root.child(r)))

    flags = map_indexed(cfg.replicates, one, threads)
    n = cfg.replicates
    phat = pairwise_sum(flags) / n
    return EstimateWithCI(
        mean=phat, stderr=math.sqrt(max(0.0, phat * (1.0 - phat) / n)), replicates=n
    )


def oracle_psi(
    params: RiskParams,
    model: BlockModel,
    group: AgentSubset,
    horizon: float,
    outer_networks: int,
    inner_paths: int,
    base_seed: int,
    threads: int = 1,
) -> EstimateWithCI:
    """Nested Monte Carlo estimate of the group ruin probability.

    Samples ``outer_networks`` independent networks and, per network, the
    ruin frequency over ``inner_paths`` surplus paths.  The mean over
    networks estimates the ruin probability from below (horizon
    truncation); the standard error comes from the spread of the
    per-network fractions.
    """
    group.validate_for(params.q)
    if outer_networks < 2:
        raise ValueError("need at least two outer network samples")
    if inner_paths < 1:
        raise ValueError("need at least one inner path")
    total_reserve = float(params.u[group.zero_based()].sum())
    if not total_reserve > 0:
        raise ValueError("total reserve must be positive")

    def one_network(n: int) -> float:
        rng = stream(base_seed, ORACLE_NET_DOMAIN, n)
        types = sample_types(model, params.q, params.d, rng)
        graph = sample_graph(model, types, rng)
        weights = build_weights(graph, group, params)
        cfg = PathConfig(
            params=params,
            graph=graph,
            group=group,
            weights=weights,
            horizon=horizon,
            replicates=inner_paths,
        )
        root = StreamKey(int(base_seed), (ORACLE_PATH_DOMAIN, n))
        ruined = [float(simulate_ruin_path(cfg, root.child(r))) for r in range(inner_paths)]
        return pairwise_sum(ruined) / inner_paths

    fractions = np.asarray(map_indexed(outer_networks, one_network, threads))
    mean = pairwise_sum(fractions) / outer_networks
    var = float(((fractions - mean) ** 2).sum()) / (outer_networks - 1)
    return EstimateWithCI(
        mean=mean,
        stderr=math.sqrt(var / outer_networks),
        replicates=int(outer_networks),
    )
