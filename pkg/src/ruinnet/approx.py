"""Mixture-of-normals approximation of the tail probability P(PK ratio < 1).

Conditionally on the type configuration of the group and the objects, the
group-connection indicators are independent Bernoulli variables, so the
weighted indicator sum ``sum_j (xi_j - 1) I_j`` is approximately normal
with mean ``sum_j (xi_j - 1) p(c_j)`` and variance
``sum_j (xi_j - 1)^2 p(c_j)(1 - p(c_j))``.  Mixing the per-configuration
normals with the configuration law yields an approximation of the tail
probability together with an explicit error bound

    9.4 * sum_c P(config = c) * sum_j E|Z_j(c)|^3,

where ``Z_j(c)`` are the standardised summands, with

    E|Z_j(c)|^3 = |xi_j - 1|^3 * (p(1-p)^3 + (1-p) p^3) / sigma^3(c).

The per-configuration sums collapse over exchangeable coordinates: agent
types enter only through their multiset, and objects of equal loading
enter only through per-type counts, which keeps exact enumeration feasible
far beyond the raw configuration space.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from math import lgamma
from typing import Iterator, Optional

import numpy as np

from .model import AgentSubset, LoadingVector, RiskParams, compute_loadings
from .netgen import BlockModel, _draw_types, connect_prob
from .streams import APPROX_DOMAIN, map_blocks, pairwise_sum, stream

#: Constant of the Berry-Esseen-type bound for sums of independent,
#: not identically distributed summands.
BOUND_CONSTANT = 9.4

#: Largest number of collapsed configurations exact mode will enumerate.
MAX_EXACT_TERMS = 1_000_000

#: Memory cap (floats) for one vectorised chunk of sampled configurations.
_SAMPLE_CHUNK_FLOATS = 1 << 22

TAIL_TO_ONE = "TAIL_TO_ONE"
TAIL_TO_ZERO = "TAIL_TO_ZERO"
INDETERMINATE = "INDETERMINATE"

MODE_EXACT = "exact"
MODE_SAMPLED = "sampled"
MODE_CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class MixtureStats:
    """Normal-component statistics of one type configuration.

    Attributes:
        mean: ``sum_j (xi_j - 1) p(c_j)``.
        variance: ``sum_j (xi_j - 1)^2 p(c_j)(1 - p(c_j))``.
        third_sum: ``sum_j E|Z_j(c)|^3`` (0 and ``degenerate=True`` when the
            variance vanishes).
        weight: Probability or sampling weight of the configuration.
        degenerate: The component is a point mass at ``mean``.
    """

    mean: float
    variance: float
    third_sum: float
    weight: float = 1.0
    degenerate: bool = False

    def __post_init__(self):
        if self.variance < 0 or self.third_sum < 0:
            raise ValueError("variance and third_sum must be nonnegative")
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("weight must lie in [0, 1]")


@dataclass(frozen=True)
class ApproxResult:
    """Aggregated mixture approximation with its error bound.

    ``degenerate_weight`` records the total weight of point-mass
    components, which contribute nothing to the bound.
    """

    probability: float
    stein_bound: float
    mode: str
    config_count: int
    sampling_stderr: Optional[float] = None
    degenerate_weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0 + 1e-12:
            raise ValueError("probability must lie in [0, 1]")
        if self.stein_bound < 0:
            raise ValueError("bound must be nonnegative")


@dataclass(frozen=True)
class PhaseVerdict:
    """Asymptotic phase of the tail probability as the object count grows."""

    limit_mean_sign: int
    verdict: str
    beta: float


def p_of_config(model: BlockModel, agent_types, object_type: int) -> float:
    """Conditional group-connection probability given realised types:
    ``1 - prod_i (1 - p[s(i), t])``."""
    s = np.asarray(agent_types, dtype=np.int64)
    t = int(object_type)
    if s.min(initial=0) < 0 or s.max(initial=0) >= model.K or not 0 <= t < model.L:
        raise ValueError("type labels out of range")
    return float(1.0 - np.prod(1.0 - model.p[s, t]))


def normal_positive_prob(mean: float, variance: float) -> float:
    """P(N(mean, variance) > 0), i.e. Phi(mean/sqrt(variance)).

    Evaluated through the complementary error function (absolute error
    below 1e-12 over the whole range).  A zero variance denotes a point
    mass at ``mean``.
    """
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if variance == 0.0:
        return 1.0 if mean > 0 else 0.0
    return 0.5 * math.erfc(-mean / math.sqrt(2.0 * variance))


def mixture_stats(
    params: RiskParams,
    loadings: LoadingVector,
    model: BlockModel,
    agent_types,
    object_types,
) -> MixtureStats:
    """Normal-component statistics for one realised type configuration."""
    s = np.asarray(agent_types, dtype=np.int64)
    t = np.asarray(object_types, dtype=np.int64)
    if t.size != params.d:
        raise ValueError("object types must cover every object")
    pc = 1.0 - np.prod(1.0 - model.p[s[:, None], t[None, :]], axis=0)
    xm = loadings.xi - 1.0
    mean = float((xm * pc).sum())
    var = float((xm * xm * pc * (1.0 - pc)).sum())
    if var == 0.0:
        return MixtureStats(mean=mean, variance=0.0, third_sum=0.0, degenerate=True)
    raw3 = float((np.abs(xm) ** 3 * (pc * (1.0 - pc) ** 3 + (1.0 - pc) * pc**3)).sum())
    return MixtureStats(mean=mean, variance=var, third_sum=raw3 / var**1.5)


def _loading_classes(loadings: LoadingVector) -> tuple[np.ndarray, np.ndarray]:
    """Object classes of identical loading ``xi``: values and sizes."""
    uniq, inverse = np.unique(loadings.xi, return_inverse=True)
    sizes = np.bincount(inverse, minlength=uniq.size).astype(np.int64)
    return uniq, sizes


def _stats_from_counts(
    xi_vals: np.ndarray, counts_gl: np.ndarray, p_l: np.ndarray
) -> tuple[float, float, float]:
    """(mean, variance, raw third-moment sum) from per-(class, object-type) counts."""
    xm = xi_vals - 1.0
    s2 = p_l * (1.0 - p_l)
    h = p_l * (1.0 - p_l) ** 3 + (1.0 - p_l) * p_l**3
    mean = float((xm * (counts_gl @ p_l)).sum())
    var = float((xm * xm * (counts_gl @ s2)).sum())
    raw3 = float((np.abs(xm) ** 3 * (counts_gl @ h)).sum())
    return mean, var, raw3


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial_weight(counts, probs: np.ndarray) -> float:
    n = sum(counts)
    log_w = lgamma(n + 1)
    for m, pr in zip(counts, probs):
        if m == 0:
            continue
        if pr == 0.0:
            return 0.0
        log_w += m * math.log(pr) - lgamma(m + 1)
    return math.exp(log_w)


def _agent_multisets(model: BlockModel, size_q: int) -> Iterator[tuple[tuple[int, ...], float]]:
    """Multisets of ``size_q`` iid agent types with their multinomial weights."""
    for counts in _compositions(int(size_q), model.K):
        weight = _multinomial_weight(counts, model.w)
        if weight > 0.0:
            yield counts, weight


def exact_term_count(model: BlockModel, size_q: int, n_classes_sizes) -> int:
    """Number of collapsed configurations exact mode would enumerate."""
    terms = math.comb(int(size_q) + model.K - 1, model.K - 1)
    for dg in n_classes_sizes:
        terms *= math.comb(int(dg) + model.L - 1, model.L - 1)
    return terms


def exact_enumerable(params: RiskParams, model: BlockModel, group: AgentSubset) -> bool:
    """Whether exact mode can enumerate this instance within the term cap."""
    _, sizes = _loading_classes(compute_loadings(params))
    return exact_term_count(model, group.size, sizes) <= MAX_EXACT_TERMS


def _enumerate_collapsed(
    model: BlockModel, xi_vals: np.ndarray, sizes: np.ndarray, size_q: int
) -> Iterator[tuple[float, float, float, float]]:
    """Yield ``(weight, mean, variance, raw3)`` over collapsed configurations."""
    for m_counts, w_agent in _agent_multisets(model, size_q):
        m = np.asarray(m_counts, dtype=np.int64)
        p_l = 1.0 - np.prod((1.0 - model.p) ** m[:, None], axis=0)
        per_class: list[list[tuple[tuple[int, ...], float]]] = []
        for dg in sizes:
            rows = []
            for comp in _compositions(int(dg), model.L):
                w_comp = _multinomial_weight(comp, model.v)
                if w_comp > 0.0:
                    rows.append((comp, w_comp))
            per_class.append(rows)
        for combo in itertools.product(*per_class):
            weight = w_agent
            for _, w_comp in combo:
                weight *= w_comp
            counts_gl = np.asarray([comp for comp, _ in combo], dtype=np.float64)
            mean, var, raw3 = _stats_from_counts(xi_vals, counts_gl, p_l)
            yield weight, mean, var, raw3


def _closed_form(
    params: RiskParams, model: BlockModel, group: AgentSubset, loadings: LoadingVector
) -> ApproxResult:
    pc = connect_prob(model, group.size)
    xi_vals, sizes = _loading_classes(loadings)
    mean, var, raw3 = _stats_from_counts(
        xi_vals, sizes.astype(np.float64)[:, None], np.array([pc])
    )
    if var == 0.0:
        prob = 1.0 if mean > 0 else 0.0
        return ApproxResult(prob, 0.0, MODE_CLOSED_FORM, 1, degenerate_weight=1.0)
    bound = BOUND_CONSTANT * raw3 / var**1.5
    return ApproxResult(normal_positive_prob(mean, var), bound, MODE_CLOSED_FORM, 1)


def _exact(
    params: RiskParams, model: BlockModel, group: AgentSubset, loadings: LoadingVector
) -> ApproxResult:
    xi_vals, sizes = _loading_classes(loadings)
    terms = exact_term_count(model, group.size, sizes)
    if terms > MAX_EXACT_TERMS:
        raise ValueError(
            f"exact mode would enumerate {terms} configurations "
            f"(limit {MAX_EXACT_TERMS}); use sampled mode"
        )
    prob = bound = deg_weight = 0.0
    count = 0
    for weight, mean, var, raw3 in _enumerate_collapsed(model, xi_vals, sizes, group.size):
        count += 1
        if var == 0.0:
            prob += weight * (1.0 if mean > 0 else 0.0)
            deg_weight += weight
        else:
            prob += weight * normal_positive_prob(mean, var)
            bound += weight * BOUND_CONSTANT * raw3 / var**1.5
    return ApproxResult(
        probability=min(prob, 1.0),
        stein_bound=bound,
        mode=MODE_EXACT,
        config_count=count,
        degenerate_weight=deg_weight,
    )


def _sampled(
    params: RiskParams,
    model: BlockModel,
    group: AgentSubset,
    loadings: LoadingVector,
    m_configs: int,
    base_seed: int,
    threads: int,
) -> ApproxResult:
    if m_configs < 100:
        raise ValueError("sampled mode needs at least 100 configurations")
    xm = loadings.xi - 1.0
    n = group.size
    d = params.d
    chunk_cap = max(1, _SAMPLE_CHUNK_FLOATS // max(1, n * d))

    def work(k: int, lo: int, hi: int):
        rng = stream(base_seed, APPROX_DOMAIN, k)
        want = hi - lo
        probs = np.empty(want)
        bounds = np.empty(want)
        deg = 0.0
        done = 0
        while done < want:
            m = min(chunk_cap, want - done)
            s = _draw_types(rng, model.w, (m, n))
            t = _draw_types(rng, model.v, (m, d))
            pm = model.p[s[:, :, None], t[:, None, :]]
            pc = 1.0 - np.prod(1.0 - pm, axis=1)
            mean_v = (xm[None, :] * pc).sum(axis=1)
            var_v = (xm[None, :] ** 2 * pc * (1.0 - pc)).sum(axis=1)
            h = pc * (1.0 - pc) ** 3 + (1.0 - pc) * pc**3
            raw3_v = (np.abs(xm[None, :]) ** 3 * h).sum(axis=1)
            pos = var_v > 0.0
            prob_v = np.where(pos, 0.0, (mean_v > 0).astype(np.float64))
            prob_v[pos] = [
                normal_positive_prob(mv, vv) for mv, vv in zip(mean_v[pos], var_v[pos])
            ]
            bound_v = np.zeros(m)
            bound_v[pos] = BOUND_CONSTANT * raw3_v[pos] / var_v[pos] ** 1.5
            deg += float((~pos).sum())
            probs[done : done + m] = prob_v
            bounds[done : done + m] = bound_v
            done += m
        return (
            pairwise_sum(probs),
            pairwise_sum(probs * probs),
            pairwise_sum(bounds),
            deg,
        )

    parts = map_blocks(m_configs, work, threads)
    total = pairwise_sum([p[0] for p in parts])
    total_sq = pairwise_sum([p[1] for p in parts])
    total_bound = pairwise_sum([p[2] for p in parts])
    deg_count = sum(p[3] for p in parts)
    mean = total / m_configs
    var = max(0.0, (total_sq - m_configs * mean * mean) / (m_configs - 1))
    return ApproxResult(
        probability=mean,
        stein_bound=total_bound / m_configs,
        mode=MODE_SAMPLED,
        config_count=int(m_configs),
        sampling_stderr=math.sqrt(var / m_configs),
        degenerate_weight=deg_count / m_configs,
    )


def mixture_probability(
    params: RiskParams,
    model: BlockModel,
    group: AgentSubset,
    mode: str,
    m_configs: int = 10_000,
    base_seed: int = 0,
    threads: int = 1,
) -> ApproxResult:
    """Mixture-normal approximation of P(PK ratio < 1) with its error bound.

    Args:
        params: Risk parameters (supply the loadings).
        model: Network model.
        group: Agent group; only its size matters (agents are exchangeable).
        mode: ``exact`` (collapsed enumeration), ``sampled`` (Monte Carlo
            over configurations), or ``closed_form`` (one-type models).
        m_configs: Sampled-mode configuration count (>= 100).
        base_seed: Sampled-mode stream seed.
        threads: Worker threads (never affects the result).
    """
    group.validate_for(params.q)
    loadings = compute_loadings(params)
    if mode == MODE_CLOSED_FORM:
        if not model.is_bernoulli:
            raise ValueError("closed_form mode requires a one-type model")
        return _closed_form(params, model, group, loadings)
    if mode == MODE_EXACT:
        return _exact(params, model, group, loadings)
    if mode == MODE_SAMPLED:
        return _sampled(params, model, group, loadings, m_configs, base_seed, threads)
    raise ValueError(f"unknown mode {mode!r}")


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def phase_classify(
    params: RiskParams, model: BlockModel, group: AgentSubset, beta: float
) -> PhaseVerdict:
    """Asymptotic verdict for the tail probability in the moderately dense
    regime (edge probabilities of order ``d**-beta`` with ``beta`` in (0,1)).

    For one-type models the verdict follows the sign of the average
    loading excess ``mean(xi - 1)``; in general each collapsed
    configuration's scaled mean must have a common strict sign, otherwise
    the phase is indeterminate.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError("density exponent beta must lie in (0, 1)")
    group.validate_for(params.q)
    loadings = compute_loadings(params)
    if np.any(loadings.xi == 1.0):
        warnings.warn(
            "some objects have zero loading excess (xi == 1); the phase "
            "classification assumes loadings bounded away from 1",
            stacklevel=2,
        )
    if model.is_bernoulli:
        # class-collapsed sum so that perfectly balanced loadings cancel exactly
        xi_vals, sizes = _loading_classes(loadings)
        sign = _sign(float(((xi_vals - 1.0) * sizes).sum()) / params.d)
    else:
        xi_vals, sizes = _loading_classes(loadings)
        if exact_term_count(model, group.size, sizes) > MAX_EXACT_TERMS:
            raise ValueError("too many configurations to classify exactly")
        signs = {
            _sign(mean)
            for weight, mean, _, _ in _enumerate_collapsed(model, xi_vals, sizes, group.size)
            if weight > 0.0
        }
        sign = signs.pop() if len(signs) == 1 else 0
    verdict = TAIL_TO_ONE if sign > 0 else TAIL_TO_ZERO if sign < 0 else INDETERMINATE
    return PhaseVerdict(limit_mean_sign=sign, verdict=verdict, beta=float(beta))
