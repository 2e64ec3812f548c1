"""Bipartite random networks from a stochastic blockmodel.

Agents and objects carry latent types; an edge between agent ``i`` and
object ``j`` appears independently with probability ``p[s(i), t(j)]``
given the types.  The one-type special case is a bipartite Bernoulli
graph.  Type labels are 0-based indices into the type-probability vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .model import AgentSubset

#: Largest number of terms the enumerated connection-probability oracle
#: will expand (K^|Q| * L).
MAX_ENUM_TERMS = 10_000_000


def _as_prob_vector(x, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a nonempty vector")
    if (arr < 0).any():
        raise ValueError(f"{name} must be nonnegative")
    if abs(arr.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must sum to 1 (got {arr.sum()!r})")
    return arr


@dataclass(frozen=True)
class BlockModel:
    """Stochastic blockmodel: type probabilities and edge-probability matrix.

    Attributes:
        w: Agent-type probabilities, length ``K``.
        v: Object-type probabilities, length ``L``.
        p: ``K x L`` matrix of edge probabilities.
    """

    w: np.ndarray
    v: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        w = _as_prob_vector(self.w, "w")
        v = _as_prob_vector(self.v, "v")
        p = np.atleast_2d(np.asarray(self.p, dtype=np.float64))
        if p.shape != (w.size, v.size):
            raise ValueError(f"p must have shape ({w.size}, {v.size}), got {p.shape}")
        if (p < 0).any() or (p > 1).any():
            raise ValueError("edge probabilities must lie in [0, 1]")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "p", p)

    @classmethod
    def bernoulli(cls, p: float) -> "BlockModel":
        """One agent type, one object type, edge probability ``p``."""
        return cls(w=np.ones(1), v=np.ones(1), p=np.full((1, 1), float(p)))

    @property
    def K(self) -> int:
        return self.w.size

    @property
    def L(self) -> int:
        return self.v.size

    @property
    def is_bernoulli(self) -> bool:
        return self.K == 1 and self.L == 1


@dataclass(frozen=True)
class TypeAssignment:
    """Realised types: ``s[i]`` for agents, ``t[j]`` for objects (0-based labels)."""

    s: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=np.int64))
        object.__setattr__(self, "t", np.asarray(self.t, dtype=np.int64))
        if self.s.ndim != 1 or self.t.ndim != 1:
            raise ValueError("type assignments must be one-dimensional")
        if (self.s < 0).any() or (self.t < 0).any():
            raise ValueError("type labels must be nonnegative")


@dataclass(frozen=True)
class BipartiteGraph:
    """Realised bipartite incidence between ``q`` agents and ``d`` objects."""

    incidence: np.ndarray

    def __post_init__(self):
        inc = np.asarray(self.incidence, dtype=bool)
        if inc.ndim != 2:
            raise ValueError("incidence must be a q x d boolean matrix")
        object.__setattr__(self, "incidence", inc)

    @property
    def q(self) -> int:
        return self.incidence.shape[0]

    @property
    def d(self) -> int:
        return self.incidence.shape[1]


def _draw_types(rng: np.random.Generator, probs: np.ndarray, size) -> np.ndarray:
    if probs.size == 1:
        return np.zeros(size, dtype=np.int64)
    return rng.choice(probs.size, size=size, p=probs)


def sample_types(model: BlockModel, q: int, d: int, rng: np.random.Generator) -> TypeAssignment:
    """Draw iid agent types from ``w`` and object types from ``v``."""
    if q < 1 or d < 1:
        raise ValueError("need at least one agent and one object")
    s = _draw_types(rng, model.w, int(q))
    t = _draw_types(rng, model.v, int(d))
    return TypeAssignment(s=s, t=t)


def sample_graph(model: BlockModel, types: TypeAssignment, rng: np.random.Generator) -> BipartiteGraph:
    """Draw edges independently with probability ``p[s(i), t(j)]`` given the types."""
    if types.s.max(initial=0) >= model.K or types.t.max(initial=0) >= model.L:
        raise ValueError("type assignment out of range for this model")
    pm = model.p[types.s[:, None], types.t[None, :]]
    inc = rng.random(pm.shape) < pm
    return BipartiteGraph(incidence=inc)


def group_indicators(graph: BipartiteGraph, group: AgentSubset) -> np.ndarray:
    """Boolean vector: object ``j`` is connected to some agent of ``group``."""
    group.validate_for(graph.q)
    return graph.incidence[group.zero_based()].any(axis=0)


def connect_prob(model: BlockModel, size_q: int) -> float:
    """Probability that a fixed object connects to a group of ``size_q`` agents.

    Uses the factorised form ``sum_l v_l * (1 - (sum_k w_k (1 - p_kl))^|Q|)``,
    which is exact because agent types are iid.
    """
    if size_q < 1:
        raise ValueError("group size must be at least 1")
    no_edge_per_l = (model.w[:, None] * (1.0 - model.p)).sum(axis=0) ** int(size_q)
    return float((model.v * (1.0 - no_edge_per_l)).sum())


def connect_prob_enumerated(model: BlockModel, size_q: int) -> float:
    """Brute-force evaluation of the group-connection probability.

    Expands the full sum over agent-type tuples and object types; kept as
    an independent oracle for :func:`connect_prob`.
    """
    if size_q < 1:
        raise ValueError("group size must be at least 1")
    if model.K**size_q * model.L > MAX_ENUM_TERMS:
        raise ValueError("instance too large to enumerate; use connect_prob")
    total = 0.0
    for ks in itertools.product(range(model.K), repeat=int(size_q)):
        w_weight = float(np.prod(model.w[list(ks)]))
        if w_weight == 0.0:
            continue
        for l in range(model.L):
            no_edge = float(np.prod(1.0 - model.p[list(ks), l]))
            total += (1.0 - no_edge) * model.v[l] * w_weight
    return total


def sample_group_indicators(
    model: BlockModel, size_q: int, d: int, rng: np.random.Generator
) -> np.ndarray:
    """Fast path (one-type models): draw the group-connection indicators directly.

    Under a Bernoulli network the indicators are iid with success
    probability ``1 - (1-p)^|Q|``, so the graph itself never needs to be
    materialised.
    """
    if not model.is_bernoulli:
        raise ValueError("direct indicator sampling requires a one-type model")
    pc = connect_prob(model, size_q)
    return rng.random(int(d)) < pc


def sample_group_counts(
    model: BlockModel,
    size_q: int,
    class_sizes: np.ndarray,
    rng: np.random.Generator,
    replicates: int,
) -> np.ndarray:
    """Fast path (one-type models): counts of group-connected objects per class.

    For a partition of the ``d`` objects into classes of sizes
    ``class_sizes``, the per-class counts of connected objects are
    independent binomials with success probability ``1 - (1-p)^|Q|``,
    which is distributionally exact and collapses a ``d``-dimensional
    indicator draw into ``len(class_sizes)`` binomials.

    Returns:
        Integer array of shape ``(replicates, len(class_sizes))``.
    """
    if not model.is_bernoulli:
        raise ValueError("collapsed count sampling requires a one-type model")
    sizes = np.asarray(class_sizes, dtype=np.int64)
    pc = connect_prob(model, size_q)
    return rng.binomial(sizes[None, :], pc, size=(int(replicates), sizes.size))
