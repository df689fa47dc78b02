"""scikit-learn style front ends.

Group formation is a clustering of players, so :class:`CoalitionFormation`
behaves like a clusterer: ``fit(X)`` runs best-response dynamics from
singletons and exposes ``labels_``. ``X`` holds player positions (one row
per player) or, with ``topology="graph"``, a square adjacency matrix.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bounds import applicable_bound
from .equilibrium import (
    DynamicsConfig,
    best_response_dynamics,
    enumerate_nash,
    is_nash,
    richest_group,
)
from .model import Partition, RiskModel
from .topology import EuclideanD, GraphTopology, Line1D, SamplingConfig, Topology

TOPOLOGIES = ("auto", "line", "euclidean", "graph")


def check_instance(X, topology: str = "auto", samples: int = 200_000, seed: int = 0) -> Topology:
    """Validate ``X`` and build the matching instance."""
    if isinstance(X, Topology):
        return X
    if topology not in TOPOLOGIES:
        raise ValueError(f"topology must be one of {TOPOLOGIES}, got {topology!r}")
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if topology == "graph":
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValueError(f"graph input must be a square adjacency matrix, got shape {X.shape}")
        if not np.array_equal(X, X.T):
            raise ValueError("adjacency matrix must be symmetric")
        if np.any(np.diag(X) != 0):
            raise ValueError("adjacency matrix must have a zero diagonal")
        u, v = np.nonzero(np.triu(X, 1))
        return GraphTopology(X.shape[0], zip(u.tolist(), v.tolist()))
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if topology == "line" or (topology == "auto" and X.shape[1] == 1):
        if X.shape[1] != 1:
            raise ValueError(f"line topology needs one coordinate per player, got {X.shape[1]}")
        return Line1D(X[:, 0])
    return EuclideanD(X, SamplingConfig(samples, seed))


class CoalitionFormation(ClusterMixin, BaseEstimator):
    """Partition players into groups by best-response dynamics.

    Parameters
    ----------
    r : float
        Risk aversion in (0, 1).
    M : float
        Prize money; verdicts do not depend on it, reported utilities do.
    topology : {"auto", "line", "euclidean", "graph"}
    samples, seed : int
        Monte Carlo budget and seed for Euclidean instances with d >= 2.
    max_steps : int
    order : {"deterministic", "random"}
    allow_empty_defect : bool
    rtol : float
        Relative margin a utility must clear to count as an increase.

    Attributes
    ----------
    labels_ : ndarray of shape (n_players,)
    partition_ : Partition
    converged_ : bool
    n_iter_ : int
    trace_ : list of Move
    report_ : EquilibriumReport
    richest_fraction_ : float
    """

    def __init__(self, r=0.5, M=1.0, topology="auto", samples=200_000, seed=0,
                 max_steps=10_000, order="deterministic", allow_empty_defect=False, rtol=1e-12):
        self.r = r
        self.M = M
        self.topology = topology
        self.samples = samples
        self.seed = seed
        self.max_steps = max_steps
        self.order = order
        self.allow_empty_defect = allow_empty_defect
        self.rtol = rtol

    def _risk(self) -> RiskModel:
        return RiskModel(self.r, self.M, self.rtol)

    def fit(self, X, y=None, initial: Partition | None = None):
        risk = self._risk()
        config = DynamicsConfig(self.max_steps, self.order, self.seed, self.allow_empty_defect)
        instance = check_instance(X, self.topology, self.samples, self.seed)
        start = initial if initial is not None else Partition.singletons(instance.n_players)
        result = best_response_dynamics(start, instance, risk, config)
        self.instance_ = instance
        self.partition_ = result.partition
        self.labels_ = np.asarray(result.partition.labels())
        self.converged_ = result.converged
        self.trace_ = result.trace
        self.n_iter_ = len(result.trace)
        self.report_ = is_nash(result.partition, instance, risk, self.allow_empty_defect)
        self.richest_fraction_ = self.report_.richest_fraction
        return self

    def score(self, X=None, y=None):
        """Coverage fraction of the richest group found by ``fit``."""
        check_is_fitted(self, "partition_")
        return self.richest_fraction_


class NashEnumerator(BaseEstimator):
    """Exhaustively list the Nash partitions of a small instance.

    Attributes
    ----------
    partitions_ : list of Partition
    richest_fractions_ : ndarray
    bound_ : float or None
        Theorem lower bound on the richest fraction for this topology.
    """

    def __init__(self, r=0.5, M=1.0, topology="auto", samples=200_000, seed=0,
                 allow_empty_defect=False, n_limit=12, rtol=1e-12):
        self.r = r
        self.M = M
        self.topology = topology
        self.samples = samples
        self.seed = seed
        self.allow_empty_defect = allow_empty_defect
        self.n_limit = n_limit
        self.rtol = rtol

    def fit(self, X, y=None):
        risk = RiskModel(self.r, self.M, self.rtol)
        instance = check_instance(X, self.topology, self.samples, self.seed)
        self.instance_ = instance
        self.partitions_ = enumerate_nash(instance, risk, self.allow_empty_defect, self.n_limit)
        self.richest_fractions_ = np.array(
            [richest_group(p, instance, risk)[1] for p in self.partitions_]
        )
        self.bound_ = applicable_bound(instance, self.r)[0]
        return self

    def transform(self, X=None):
        """Label vectors of the Nash partitions, one row each."""
        check_is_fitted(self, "partitions_")
        return np.array([p.labels() for p in self.partitions_], dtype=int).reshape(len(self.partitions_), -1)
