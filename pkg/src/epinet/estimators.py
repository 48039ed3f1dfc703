"""scikit-learn style wrappers around the perturbation and profile routines.

Transformers take a graph (anything :func:`~epinet.validation.check_graph`
accepts) and return a perturbed :class:`~epinet.graph.Graph`; the NCP
estimators learn a profile in ``fit`` and expose its AANCP via ``score``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import ncp, perturb
from .graph import triangles
from .validation import check_count, check_fraction, check_graph, check_rng

__all__ = [
    "ConfigurationRewirer",
    "UniformRewirer",
    "CommonNeighborSparsifier",
    "CommunityShuffler",
    "TriangleShuffler",
    "EpidemicNCP",
    "PageRankNCP",
]


class _Rewirer(TransformerMixin, BaseEstimator):
    _fn = None

    def __init__(self, fraction=1.0, count=None, random_state=None):
        self.fraction = fraction
        self.count = count
        self.random_state = random_state

    def fit(self, X, y=None):
        g = check_graph(X)
        if self.count is not None:
            self.n_steps_ = check_count(self.count)
        else:
            if self.fraction < 0:
                raise ValueError("fraction must be non-negative")
            self.n_steps_ = int(round(self.fraction * g.m))
        self.n_nodes_ = g.n
        return self

    def transform(self, X):
        check_is_fitted(self, "n_steps_")
        g = check_graph(X)
        return type(self)._fn(g, self.n_steps_, check_rng(self.random_state))


class ConfigurationRewirer(_Rewirer):
    """Degree-preserving double edge swaps; ``fraction`` is in units of ``m``."""

    _fn = staticmethod(perturb.rewire_cm)


class UniformRewirer(_Rewirer):
    """Edge-count preserving rewiring towards G(n, p)."""

    _fn = staticmethod(perturb.rewire_gnp)


class CommonNeighborSparsifier(TransformerMixin, BaseEstimator):
    def __init__(self, keep_fraction=0.5):
        self.keep_fraction = keep_fraction

    def fit(self, X, y=None):
        check_fraction(self.keep_fraction, "keep_fraction")
        check_graph(X)
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        return perturb.sparsify_common_neighbors(check_graph(X), self.keep_fraction)


class CommunityShuffler(TransformerMixin, BaseEstimator):
    """Shuffle edges inside communities; ``y`` in ``fit`` is the partition."""

    def __init__(self, swaps_per_edge=100, random_state=None):
        self.swaps_per_edge = swaps_per_edge
        self.random_state = random_state

    def fit(self, X, y=None):
        if y is None:
            raise ValueError("a node partition must be passed as y")
        g = check_graph(X)
        if len(y) != g.n:
            raise ValueError("partition must assign every node")
        self.partition_ = y
        return self

    def transform(self, X):
        check_is_fitted(self, "partition_")
        return perturb.intra_community_shuffle(check_graph(X), self.partition_,
                                               check_rng(self.random_state), self.swaps_per_edge)


class TriangleShuffler(TransformerMixin, BaseEstimator):
    """Map a graph to its triangle hyperedges with ``count`` of them relocated."""

    def __init__(self, count=0, random_state=None):
        self.count = count
        self.random_state = random_state

    def fit(self, X, y=None):
        g = check_graph(X)
        check_count(self.count)
        self.triangles_ = triangles(g)
        self.n_nodes_ = g.n
        return self

    def transform(self, X):
        check_is_fitted(self, "triangles_")
        tri = triangles(check_graph(X))
        return perturb.shuffle_triangles(tri, self.n_nodes_, self.count, check_rng(self.random_state))


class EpidemicNCP(BaseEstimator):
    """Epidemic network community profile; ``score`` returns its AANCP."""

    def __init__(self, n_seeds=200, trials_per_seed=20, beta=0.3, repetitions=8, random_state=None):
        self.n_seeds = n_seeds
        self.trials_per_seed = trials_per_seed
        self.beta = beta
        self.repetitions = repetitions
        self.random_state = random_state

    def fit(self, X, y=None):
        g = check_graph(X)
        self.profile_ = ncp.epidemic_ncp(g, self.n_seeds, self.trials_per_seed,
                                         check_rng(self.random_state), self.beta, self.repetitions)
        self.aancp_ = ncp.aancp(self.profile_)
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "profile_")
        return self.aancp_


class PageRankNCP(BaseEstimator):
    """Seeded-PageRank community profile with stored member sets."""

    def __init__(self, n_seeds=200, alpha=None, random_state=None):
        self.n_seeds = n_seeds
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        g = check_graph(X)
        self.profile_, self.sets_ = ncp.ppr_ncp(g, self.n_seeds, check_rng(self.random_state),
                                                self.alpha)
        self.aancp_ = ncp.aancp(self.profile_)
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "profile_")
        return self.aancp_
