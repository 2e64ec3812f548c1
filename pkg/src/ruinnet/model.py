"""Risk-model parameters, proportional loss-sharing weights, and the
classical exponential-claims ruin formula.

Each object (insured risk) carries a premium rate ``c_j`` and a mean claim
size ``mu_j``; claims arrive at a common Poisson intensity ``lam``.  A group
of agents that insures an object splits the loss equally, scaled so that
every column of the weighted adjacency matrix sums to at most one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .netgen import BipartiteGraph

#: Floating-point slack allowed on the column-sum condition of the
#: weighted adjacency matrix.
COLUMN_SUM_TOL = 1e-12


def _as_vector(x, name: str, length: Optional[int] = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} must have length {length}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class RiskParams:
    """Scalar and vector parameters of the networked risk model.

    Attributes:
        lam: Claim arrival intensity, shared by all objects (> 0).
        c: Premium rate per object, length ``d`` (all > 0).
        mu: Mean claim size per object, length ``d`` (all > 0).
        u: Initial reserve per agent, length ``q`` (all >= 0).
    """

    lam: float
    c: np.ndarray
    mu: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "c", _as_vector(self.c, "c"))
        object.__setattr__(self, "mu", _as_vector(self.mu, "mu", self.c.size))
        object.__setattr__(self, "u", _as_vector(self.u, "u"))
        if not self.lam > 0:
            raise ValueError("claim intensity lam must be positive")
        if not (self.c > 0).all():
            raise ValueError("every premium rate must be positive")
        if not (self.mu > 0).all():
            raise ValueError("every mean claim size must be positive")
        if not (self.u >= 0).all():
            raise ValueError("reserves must be nonnegative")
        if self.u.size < 1 or self.c.size < 1:
            raise ValueError("need at least one agent and one object")

    @property
    def q(self) -> int:
        """Number of agents."""
        return self.u.size

    @property
    def d(self) -> int:
        """Number of objects."""
        return self.c.size


@dataclass(frozen=True)
class LoadingVector:
    """Per-object safety loadings: ``rho_j = lam*mu_j/c_j`` and ``xi_j = 1/rho_j``."""

    rho: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class AgentSubset:
    """Nonempty group of agents, stored as sorted distinct 1-based indices."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise ValueError("agent subset must be nonempty")
        if len(set(idx)) != len(idx):
            raise ValueError("agent subset contains duplicate indices")
        if min(idx) < 1:
            raise ValueError("agent indices are 1-based and must be >= 1")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    @classmethod
    def prefix(cls, k: int) -> "AgentSubset":
        """The subset {1, ..., k}."""
        return cls(tuple(range(1, int(k) + 1)))

    @classmethod
    def of(cls, indices: Iterable[int]) -> "AgentSubset":
        return cls(tuple(indices))

    @property
    def size(self) -> int:
        return len(self.indices)

    def zero_based(self) -> np.ndarray:
        """Member indices as a 0-based integer array (for numpy indexing)."""
        return np.asarray(self.indices, dtype=np.int64) - 1

    def validate_for(self, q: int) -> None:
        if self.indices[-1] > q:
            raise ValueError(f"agent index {self.indices[-1]} exceeds agent count {q}")


@dataclass(frozen=True)
class WeightMatrix:
    """Weighted adjacency of the bipartite network under proportional sharing.

    ``A[i, j]`` is the share of object ``j``'s loss carried by agent ``i``.
    Every column sum lies in ``[0, 1]`` (up to :data:`COLUMN_SUM_TOL`).
    """

    A: np.ndarray
    r_q: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("weight matrix must be two-dimensional")
        if (A < 0).any():
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "r_q", float(self.r_q))
        if not self.r_q > 0:
            raise ValueError("scaling constant r_q must be positive")

    def column_sums(self) -> np.ndarray:
        return self.A.sum(axis=0)


def compute_loadings(params: RiskParams) -> LoadingVector:
    """Elementwise safety loadings ``rho_j = lam*mu_j/c_j`` and ``xi_j = c_j/(lam*mu_j)``."""
    rho = params.lam * params.mu / params.c
    xi = params.c / (params.lam * params.mu)
    return LoadingVector(rho=rho, xi=xi)


def proportional_r(params: RiskParams, group: AgentSubset) -> float:
    """Group scaling constant: smallest mean claim size over all objects,
    divided by ``q - |group| + 1``.

    This choice keeps every column sum of the proportional weight matrix
    inside ``[0, 1]`` for every possible graph realisation.
    """
    group.validate_for(params.q)
    return float(params.mu.min()) / (params.q - group.size + 1)


def build_weights(
    graph: "BipartiteGraph",
    group: AgentSubset,
    params: RiskParams,
    r_q: Optional[float] = None,
) -> WeightMatrix:
    """Proportional loss-sharing weights for a realised network.

    Agents in ``group`` that insure object ``j`` each carry the share
    ``r_q / (n_j * mu_j)`` where ``n_j`` counts the group members connected
    to ``j``; objects with no group connection get an all-zero column
    (0/0 := 0).  Note the per-column share applies to *every* agent
    connected to ``j``, so column sums run over all agents.

    Args:
        graph: Realised bipartite incidence.
        group: The agent group.
        params: Model parameters (supplies ``mu`` and the dimensions).
        r_q: Optional custom scaling constant; defaults to
            :func:`proportional_r`.

    Returns:
        The validated :class:`WeightMatrix`.

    Raises:
        ValueError: If a column sum exceeds ``1 + COLUMN_SUM_TOL``, which
            signals an invalid custom ``r_q``.
    """
    if graph.q != params.q or graph.d != params.d:
        raise ValueError("graph dimensions do not match parameters")
    group.validate_for(params.q)
    if r_q is None:
        r_q = proportional_r(params, group)
    inc = graph.incidence
    group_degree = inc[group.zero_based()].sum(axis=0)
    connected = group_degree > 0
    share = np.zeros(params.d)
    share[connected] = r_q / (group_degree[connected] * params.mu[connected])
    A = inc.astype(np.float64) * share[None, :]
    col = A.sum(axis=0)
    if (col > 1.0 + COLUMN_SUM_TOL).any():
        worst = float(col.max())
        raise ValueError(
            f"column sum {worst:.6g} exceeds 1: scaling constant r_q={r_q:.6g} is too large"
        )
    return WeightMatrix(A=A, r_q=float(r_q))


def classical_ruin(lam: float, mu_j: float, c_j: float, u: float) -> float:
    """Ruin probability of a single agent fully insuring a single object
    with exponential claims: ``rho * exp(-(c - lam*mu) * u / (c * mu))``,
    or 1 when ``rho = lam*mu/c >= 1``.

    Used as a closed-form oracle for the degenerate one-agent, one-object
    network.
    """
    if not (lam > 0 and mu_j > 0 and c_j > 0):
        raise ValueError("lam, mu_j and c_j must be positive")
    if u < 0:
        raise ValueError("reserve u must be nonnegative")
    rho = lam * mu_j / c_j
    if rho >= 1.0:
        return 1.0
    return rho * math.exp(-(c_j - lam * mu_j) * u / (c_j * mu_j))
