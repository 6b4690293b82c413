"""Sensor-set selection and the empirical coverage estimate.

Coverage of a set ``S`` is the fraction of simulated outbreaks (dendrograms)
in which at least one member of ``S`` is infected.

The two tree heuristics rank nodes by their average depth over the
dendrograms in which they are infected:

* TT uses depth in the transmission tree itself;
* DT uses depth in the dominator tree of each dendrogram (rooted at a
  virtual super-source over all seeds).

Nodes infected in fewer than ``eps0`` of the runs are discarded first; ties
in average depth go to the more frequently infected node, then to the
lower node id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domtree import build_from_dendrograms, dendrogram_dominator_depths
from .epidemic import Dendrogram
from .graph import ContactNetwork
from .rng import stream


@dataclass(eq=False)
class SensorSet:
    members: np.ndarray
    strategy: str
    k: int
    params: dict = field(default_factory=dict)
    coverage: float | None = None
    mean_t_inf: float | None = None
    # candidates missing to reach k (0 when the set is full)
    shortfall: int = 0
    # for coverage-targeted selection: whether the target was met
    attained: bool = True

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.int64)

    def __len__(self):
        return len(self.members)

    def param_string(self) -> str:
        return ";".join(f"{key}={self.params[key]}" for key in sorted(self.params))

    def dumps(self) -> str:
        lines = [f"{self.strategy},{self.param_string()}"]
        lines.extend(str(v) for v in self.members.tolist())
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SensorSet":
        head, *rest = [ln for ln in text.splitlines() if ln.strip()]
        strategy, _, pstr = head.partition(",")
        params = dict(p.split("=", 1) for p in pstr.split(";") if p)
        members = [int(x) for x in rest]
        return cls(np.array(members, dtype=np.int64), strategy, len(members), params)


@dataclass(eq=False)
class NodeScores:
    """Per-node average depth (``t_inf``, NaN if never infected) and hit count."""

    t_inf: np.ndarray
    hit_count: np.ndarray
    runs: int

    @property
    def hit_rate(self) -> np.ndarray:
        return self.hit_count / self.runs


def infected_matrix(dens: Sequence[Dendrogram]) -> np.ndarray:
    if not dens:
        raise ValueError("need at least one dendrogram")
    return np.vstack([d.infection_day >= 0 for d in dens])


def estimate_coverage(members, dens: Sequence[Dendrogram] | np.ndarray) -> float:
    """Fraction of dendrograms in which some member of ``members`` is infected."""
    hit = dens if isinstance(dens, np.ndarray) else infected_matrix(dens)
    members = np.asarray(list(members), dtype=np.int64)
    if members.size == 0:
        return 0.0
    return float(hit[:, members].any(axis=1).mean())


def scores_from_depths(depths: Sequence[np.ndarray]) -> NodeScores:
    """Merge per-run depth arrays (-1 = not infected) into node scores."""
    total = np.zeros(len(depths[0]))
    hits = np.zeros(len(depths[0]), dtype=np.int64)
    for d in depths:
        ok = d >= 0
        total[ok] += d[ok]
        hits += ok
    with np.errstate(invalid="ignore", divide="ignore"):
        t_inf = np.where(hits > 0, total / np.maximum(hits, 1), np.nan)
    return NodeScores(t_inf, hits, len(depths))


def tt_scores(dens: Sequence[Dendrogram], scoring: str = "depth") -> NodeScores:
    """Transmission-tree scores.

    ``scoring="depth"`` averages generation depth; ``scoring="day"``
    averages the calendar infection day instead.
    """
    if not dens:
        raise ValueError("need at least one dendrogram")
    if scoring == "depth":
        return scores_from_depths([d.depths() for d in dens])
    if scoring == "day":
        return scores_from_depths([d.infection_day.astype(np.int64) for d in dens])
    raise ValueError(f"unknown scoring {scoring!r}")


def dt_scores(dens: Sequence[Dendrogram]) -> NodeScores:
    """Dominator-tree scores (super-source excluded from depths)."""
    trees = build_from_dendrograms(list(dens))
    return scores_from_depths([dendrogram_dominator_depths(t) for t in trees])


def rank_nodes(scores: NodeScores, eps0: float = 0.1, threshold: str = "hit_rate") -> np.ndarray:
    """Surviving candidates in selection order.

    ``threshold="hit_rate"`` drops nodes infected in fewer than ``eps0`` of
    the runs; ``threshold="depth"`` instead drops nodes whose average depth
    is below ``eps0``.  Nodes never infected are always dropped.
    """
    seen = scores.hit_count > 0
    if threshold == "hit_rate":
        keep = seen & (scores.hit_rate >= eps0)
    elif threshold == "depth":
        keep = seen & (np.nan_to_num(scores.t_inf, nan=-np.inf) >= eps0)
    else:
        raise ValueError(f"unknown threshold {threshold!r}")
    cand = np.flatnonzero(keep)
    order = np.lexsort((cand, -scores.hit_count[cand], scores.t_inf[cand]))
    return cand[order]


def _take(order: np.ndarray, k: int, scores: NodeScores, strategy: str, params: dict, hit) -> SensorSet:
    members = order[:k]
    return SensorSet(
        members,
        strategy,
        k,
        params,
        coverage=estimate_coverage(members, hit),
        mean_t_inf=float(scores.t_inf[members].mean()) if len(members) else None,
        shortfall=max(0, k - len(members)),
    )


def _check_k(k):
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")


def select_tt(dens: Sequence[Dendrogram], k: int, eps0: float = 0.1, scoring: str = "depth") -> SensorSet:
    """Transmission-tree sensors: the ``k`` lowest average-depth nodes."""
    _check_k(k)
    scores = tt_scores(dens, scoring)
    order = rank_nodes(scores, eps0)
    return _take(order, k, scores, "TT", {"k": k, "eps0": eps0, "scoring": scoring}, infected_matrix(dens))


def select_dt(dens: Sequence[Dendrogram], k: int, eps0: float = 0.1, threshold: str = "hit_rate") -> SensorSet:
    """Dominator-tree sensors: the ``k`` lowest average dominator-depth nodes.

    ``threshold="depth"`` applies ``eps0`` to average depth (discarding
    shallow nodes) rather than to the infection rate.
    """
    _check_k(k)
    scores = dt_scores(dens)
    order = rank_nodes(scores, eps0, threshold)
    return _take(order, k, scores, "DT", {"k": k, "eps0": eps0, "threshold": threshold}, infected_matrix(dens))


def select_greedy_mait(dens: Sequence[Dendrogram], k: int, eps: float, eps0: float = 0.0) -> SensorSet:
    """Add nodes in increasing ``t_inf`` until coverage reaches ``eps``, then fill to ``k``.

    If the coverage target needs more than ``k`` nodes the set grows past
    ``k``.  When every candidate together still misses ``eps`` the result
    has ``attained=False`` and carries the best coverage reached.
    """
    _check_k(k)
    if not 0 <= eps <= 1:
        raise ValueError("eps must lie in [0, 1]")
    scores = tt_scores(dens)
    order = rank_nodes(scores, eps0)
    hit = infected_matrix(dens)
    covered = np.zeros(hit.shape[0], dtype=bool)
    count = 0
    for v in order:
        if covered.mean() >= eps and count >= k:
            break
        covered |= hit[:, v]
        count += 1
    members = order[:count]
    cov = float(covered.mean())
    return SensorSet(
        members,
        "MAIT",
        k,
        {"k": k, "eps": eps, "eps0": eps0},
        coverage=cov,
        mean_t_inf=float(scores.t_inf[members].mean()) if count else None,
        shortfall=max(0, k - count),
        attained=cov >= eps,
    )


def _nominate(net: ContactNetwork, score: np.ndarray, k: int, sample_size: int | None, K: int, rng_seed: int,
              strategy: str) -> SensorSet:
    _check_k(k)
    if K < 1:
        raise ValueError("K must be >= 1")
    if sample_size is None:
        sample_size = k
    if sample_size < 1:
        raise ValueError("sample_size must be >= 1")
    rng = stream(rng_seed, "nominate")
    respondents = rng.permutation(net.n)
    chosen: list[int] = []
    taken = np.zeros(net.n, dtype=bool)
    for start in range(0, net.n, sample_size):
        for x in respondents[start:start + sample_size].tolist():
            nb = net.neighbors_of(x)
            if nb.size == 0:
                continue
            top = nb[np.lexsort((nb, -score[nb]))][:K]
            for y in top.tolist():
                if not taken[y]:
                    taken[y] = True
                    chosen.append(y)
        if len(chosen) >= k:
            break
    members = np.array(chosen[:k], dtype=np.int64)
    params = {"k": k, "K": K, "sample_size": sample_size, "rng_seed": rng_seed}
    return SensorSet(members, strategy, k, params, shortfall=max(0, k - len(members)))


def select_topk_degree(net: ContactNetwork, k: int, sample_size: int | None = None, K: int = 3,
                       rng_seed: int = 0) -> SensorSet:
    """Friend-of-friend nomination by degree.

    Respondents are drawn uniformly without replacement in batches of
    ``sample_size``; each nominates its ``K`` highest-degree distinct
    neighbours (ties to lower id).  Batches continue until ``k`` distinct
    nominees exist; the set is then cut to ``k`` in nomination order.
    """
    return _nominate(net, net.degree().astype(float), k, sample_size, K, rng_seed, "TopK")


def select_weighted_degree(net: ContactNetwork, k: int, sample_size: int | None = None, K: int = 3,
                           rng_seed: int = 0) -> SensorSet:
    """As :func:`select_topk_degree`, ranking neighbours by total contact duration."""
    return _nominate(net, net.weighted_degree(), k, sample_size, K, rng_seed, "WD")


def select_random(net: ContactNetwork, k: int, rng_seed: int = 0, exclude=None) -> SensorSet:
    _check_k(k)
    pool = np.arange(net.n)
    if exclude is not None:
        pool = np.setdiff1d(pool, np.asarray(exclude))
    if k > len(pool):
        raise ValueError(f"k={k} exceeds the {len(pool)} available nodes")
    members = stream(rng_seed, "random-set").choice(pool, size=k, replace=False)
    return SensorSet(members, "random", k, {"k": k, "rng_seed": rng_seed})
