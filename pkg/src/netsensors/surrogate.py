"""Surrogate sensors chosen from per-person features alone.

Sixteen features per node: age, gender, income, number of meetings, total
meeting duration, number of long meetings, counts of meeting types 1-5 and
percentages of meeting types 1-5.  Columns 0-2 are demographic, 3-15
describe interactions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .epicurve import run_leads
from .epidemic import DiseaseModel, SimulationConfig, run_ensemble
from .graph import ContactNetwork
from .rng import derive_seed, stream

FEATURE_NAMES = (
    "age", "gender", "income",
    "meeting_count", "total_duration", "long_meeting_count",
    "type1_count", "type2_count", "type3_count", "type4_count", "type5_count",
    "type1_pct", "type2_pct", "type3_pct", "type4_pct", "type5_pct",
)
DEMOGRAPHIC = (0, 1, 2)
INTERACTION = tuple(range(3, 16))
LONG_MEETING_SECONDS = 20000.0


def extract_features(net: ContactNetwork, long_threshold: float = LONG_MEETING_SECONDS) -> np.ndarray:
    """``(n, 16)`` feature matrix; every incident edge counts as one meeting."""
    n = net.n
    ends = np.concatenate([net.u, net.v])
    dur = np.concatenate([net.duration, net.duration])
    kind = np.concatenate([net.meeting_type, net.meeting_type])
    X = np.zeros((n, 16))
    X[:, 0] = net.age
    X[:, 1] = net.gender
    X[:, 2] = net.income
    X[:, 3] = np.bincount(ends, minlength=n)
    X[:, 4] = np.bincount(ends, weights=dur, minlength=n)
    X[:, 5] = np.bincount(ends, weights=(dur > long_threshold).astype(float), minlength=n)
    for t in range(1, 6):
        X[:, 5 + t] = np.bincount(ends, weights=(kind == t).astype(float), minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        pct = 100.0 * X[:, 6:11] / X[:, 3:4]
    X[:, 11:16] = np.nan_to_num(pct)
    return X


@dataclass(frozen=True)
class SurrogateCriteria:
    """Conjunctive selection rule on the feature matrix.

    Defaults: ages 5-20, at least 80% long meetings, at least 80% of
    meetings of type 2 (work) or 5 (school).
    """

    age_range: tuple[float, float] = (5, 20)
    long_meeting_fraction_min: float = 0.8
    required_types: tuple[int, ...] = (2, 5)
    required_type_fraction_min: float = 0.8

    def __post_init__(self):
        lo, hi = self.age_range
        if lo > hi:
            raise ValueError("age_range must have lo <= hi")
        for f in (self.long_meeting_fraction_min, self.required_type_fraction_min):
            if not 0 <= f <= 1:
                raise ValueError("fractions must lie in [0, 1]")
        if any(t not in range(1, 6) for t in self.required_types):
            raise ValueError("required types must be in 1..5")

    def dumps(self) -> str:
        return (
            f"age_min = {self.age_range[0]}\n"
            f"age_max = {self.age_range[1]}\n"
            f"long_meeting_fraction_min = {self.long_meeting_fraction_min}\n"
            f"required_types = {','.join(str(t) for t in self.required_types)}\n"
            f"required_type_fraction_min = {self.required_type_fraction_min}\n"
        )

    @classmethod
    def loads(cls, text: str) -> "SurrogateCriteria":
        kv = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                key, _, val = line.partition("=")
                kv[key.strip()] = val.strip()
        base = cls()
        return cls(
            age_range=(float(kv.get("age_min", base.age_range[0])), float(kv.get("age_max", base.age_range[1]))),
            long_meeting_fraction_min=float(kv.get("long_meeting_fraction_min", base.long_meeting_fraction_min)),
            required_types=tuple(int(t) for t in kv["required_types"].split(",")) if "required_types" in kv
            else base.required_types,
            required_type_fraction_min=float(kv.get("required_type_fraction_min", base.required_type_fraction_min)),
        )


def apply_criteria(features: np.ndarray, criteria: SurrogateCriteria) -> np.ndarray:
    """Ids of nodes meeting every criterion; nodes without meetings have zero fractions."""
    age = features[:, 0]
    meetings = features[:, 3]
    with np.errstate(invalid="ignore", divide="ignore"):
        long_frac = np.where(meetings > 0, features[:, 5] / meetings, 0.0)
        typed = features[:, [5 + t for t in criteria.required_types]].sum(axis=1)
        type_frac = np.where(meetings > 0, typed / meetings, 0.0)
    lo, hi = criteria.age_range
    ok = (
        (age >= lo) & (age <= hi)
        & (long_frac >= criteria.long_meeting_fraction_min)
        & (type_frac >= criteria.required_type_fraction_min)
    )
    return np.flatnonzero(ok)


# --------------------------------------------------------------------------
# decision tree

@dataclass
class _Node:
    value: float  # fraction of positives
    n: int
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    @property
    def leaf(self) -> bool:
        return self.feature < 0


def _gini(pos, n):
    p = pos / n
    return 2.0 * p * (1.0 - p)


@dataclass
class DecisionTree:
    """Binary classification tree with greedy Gini splits.

    Impure nodes keep splitting (zero-gain splits included) until
    ``max_depth`` or ``min_leaf`` forbids it.  A split sends ``x[feature] <= threshold`` left.  Candidate thresholds
    are midpoints between consecutive distinct values.  Ties in impurity go
    to the lower feature index, then the lower threshold.
    """

    max_depth: int = 8
    min_leaf: int = 5
    columns: tuple[int, ...] | None = None
    root: _Node | None = field(default=None, repr=False)

    def fit(self, X, y) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).astype(bool)
        if len(X) != len(y):
            raise ValueError("features and labels differ in length")
        if y.all() or not y.any():
            raise ValueError("training labels need both classes")
        cols = tuple(range(X.shape[1])) if self.columns is None else tuple(self.columns)
        self._cols = cols
        self.root = self._grow(X[:, cols], y, 0)
        return self

    def _best_split(self, X, y):
        n = len(y)
        best = (np.inf, -1, 0.0)
        total_pos = y.sum()
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            pos_left = np.cumsum(y[order])[:-1]
            n_left = np.arange(1, n)
            valid = (xs[1:] > xs[:-1]) & (n_left >= self.min_leaf) & (n - n_left >= self.min_leaf)
            if not valid.any():
                continue
            nl = n_left[valid]
            pl = pos_left[valid]
            nr = n - nl
            pr = total_pos - pl
            score = (nl * _gini(pl, nl) + nr * _gini(pr, nr)) / n
            i = int(np.argmin(score))
            if score[i] < best[0]:
                cut = np.flatnonzero(valid)[i]
                best = (float(score[i]), j, 0.5 * (xs[cut] + xs[cut + 1]))
        return best

    def _grow(self, X, y, depth):
        n = len(y)
        node = _Node(float(y.mean()), n)
        if depth >= self.max_depth or n < 2 * self.min_leaf or y.all() or not y.any():
            return node
        _, j, thr = self._best_split(X, y)
        if j < 0:
            return node
        go_left = X[:, j] <= thr
        node.feature, node.threshold = j, thr
        node.left = self._grow(X[go_left], y[go_left], depth + 1)
        node.right = self._grow(X[~go_left], y[~go_left], depth + 1)
        return node

    def predict_proba(self, X) -> np.ndarray:
        if self.root is None:
            raise RuntimeError("tree is not fitted")
        X = np.asarray(X, dtype=float)[:, self._cols]
        out = np.empty(len(X))
        stack = [(self.root, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if node.leaf:
                out[idx] = node.value
                continue
            left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[left]))
            stack.append((node.right, idx[~left]))
        return out

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X) > 0.5

    def _walk(self):
        stack = [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            yield node, d
            if not node.leaf:
                stack.append((node.left, d + 1))
                stack.append((node.right, d + 1))

    @property
    def n_leaves(self) -> int:
        return sum(node.leaf for node, _ in self._walk())

    @property
    def depth(self) -> int:
        return max(d for _, d in self._walk())


def train_tree(features, labels, max_depth: int = 8, min_leaf: int = 5, columns=None) -> DecisionTree:
    return DecisionTree(max_depth, min_leaf, None if columns is None else tuple(columns)).fit(features, labels)


# --------------------------------------------------------------------------
# feature ranking and distribution-based criteria

def total_variation(a, b, bins: int = 20) -> float:
    """Total-variation distance between the histograms of ``a`` and ``b`` on shared bins."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    if hi <= lo:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    ha = np.histogram(a, edges)[0] / len(a)
    hb = np.histogram(b, edges)[0] / len(b)
    return 0.5 * float(np.abs(ha - hb).sum())


def rank_features(features, sensors, reference, columns: Sequence[int] = tuple(range(16))) -> list[tuple[int, float]]:
    """Columns ordered by decreasing distribution difference between two groups."""
    scored = [(j, total_variation(features[sensors, j], features[reference, j])) for j in columns]
    return sorted(scored, key=lambda s: (-s[1], s[0]))


@dataclass(frozen=True)
class FeatureRange:
    feature: int
    lo: float
    hi: float


def distribution_criteria(features, sensors, reference, columns, top: int = 3, quantiles=(0.1, 0.9),
                          min_distance: float = 0.1) -> list[FeatureRange]:
    """Central range of the sensors' values on the most discriminating columns.

    Up to ``top`` columns whose total-variation distance reaches
    ``min_distance`` are used (always at least the best one).
    """
    ranked = rank_features(features, sensors, reference, columns)
    chosen = [j for j, d in ranked[:top] if d >= min_distance] or [ranked[0][0]]
    out = []
    for j in chosen:
        lo, hi = np.quantile(features[sensors, j], quantiles)
        out.append(FeatureRange(j, float(lo), float(hi)))
    return out


def apply_ranges(features, ranges: Sequence[FeatureRange]) -> np.ndarray:
    ok = np.ones(len(features), dtype=bool)
    for r in ranges:
        ok &= (features[:, r.feature] >= r.lo) & (features[:, r.feature] <= r.hi)
    return np.flatnonzero(ok)


# --------------------------------------------------------------------------
# refinement and tier comparison

def training_labels(n: int, positives, rng_seed: int):
    """Positives plus an equal number of uniformly drawn non-positive negatives."""
    positives = np.asarray(positives, dtype=np.int64)
    pool = np.setdiff1d(np.arange(n), positives)
    negatives = stream(rng_seed, "negatives").choice(pool, size=min(len(positives), len(pool)), replace=False)
    idx = np.concatenate([positives, negatives])
    y = np.concatenate([np.ones(len(positives), bool), np.zeros(len(negatives), bool)])
    return idx, y


def intersect_predictions(candidates, predictions: Sequence[np.ndarray]) -> np.ndarray:
    """Candidates predicted positive by every model (``predictions`` align with ``candidates``)."""
    candidates = np.asarray(candidates, dtype=np.int64)
    keep = np.ones(len(candidates), dtype=bool)
    for p in predictions:
        keep &= np.asarray(p, dtype=bool)
    return candidates[keep]


@dataclass
class SurrogateResult:
    members: np.ndarray
    candidates: int
    per_rate: list[tuple[float, int]]  # (rate, candidates predicted positive)

    @property
    def status(self) -> str:
        return "ok" if len(self.members) else "empty"


def _heuristic_positives(strategy, dens, k, eps0):
    from .sensors import select_dt, select_tt

    if strategy.upper() == "TT":
        return select_tt(dens, k, eps0).members
    if strategy.upper() == "DT":
        return select_dt(dens, k, eps0).members
    raise ValueError("strategy must be TT or DT")


def _n_positive(n, train_frac):
    return max(10, int(round(train_frac * n)))


def refine_surrogates(
    net: ContactNetwork,
    candidates,
    rates: Sequence[float],
    model: DiseaseModel = DiseaseModel(),
    strategy: str = "DT",
    train_frac: float = 0.02,
    rng_seed: int = 0,
    runs: int = 50,
    seeds: int = 5,
    horizon: int = 200,
    eps0: float = 0.1,
    max_depth: int = 8,
    min_leaf: int = 5,
    features: np.ndarray | None = None,
    workers: int = 1,
) -> SurrogateResult:
    """Keep the candidates that a tree trained at *every* transmission rate calls sensors.

    Per rate: simulate, label the top ``train_frac`` of the population by
    the TT/DT heuristic as positives and as many random others as
    negatives, fit a tree on all 16 features, and classify the candidates.
    """
    if not rates:
        raise ValueError("need at least one transmission rate")
    candidates = np.asarray(candidates, dtype=np.int64)
    X = extract_features(net) if features is None else features
    n_pos = _n_positive(net.n, train_frac)
    preds, per_rate = [], []
    for i, rate in enumerate(rates):
        cfg = SimulationConfig(seeds, horizon, derive_seed(rng_seed, "surrogate", i))
        ens = run_ensemble(net, model.with_beta(rate), cfg, runs, workers)
        pos = _heuristic_positives(strategy, ens.dendrograms, n_pos, eps0)
        idx, y = training_labels(net.n, pos, derive_seed(rng_seed, "labels", i))
        tree = train_tree(X[idx], y, max_depth, min_leaf)
        p = tree.predict(X[candidates]) if len(candidates) else np.zeros(0, bool)
        preds.append(p)
        per_rate.append((float(rate), int(p.sum())))
    return SurrogateResult(intersect_predictions(candidates, preds), len(candidates), per_rate)


TIERS = ("distr-demo", "distr-inter", "tree-demo", "tree-inter", "tree-demo+inter")


@dataclass(frozen=True)
class TierRow:
    tier: str
    size: int
    mean_lead: float
    var_lead: float
    n_ok: int
    n_fail: int


def _top_by_score(score, k, rng_seed):
    jitter = stream(rng_seed, "tie-break").permutation(len(score))
    return np.lexsort((jitter, -score))[:k]


def _sample_upto(nodes, k, rng_seed):
    if len(nodes) <= k:
        return np.asarray(nodes)
    return np.sort(stream(rng_seed, "tier-sample").choice(nodes, size=k, replace=False))


def tier_sensor_sets(net, train_dens, k, strategy="DT", train_frac=0.02, eps0=0.1, rng_seed=0,
                     features=None, max_depth=8, min_leaf=5) -> dict[str, np.ndarray]:
    """Sensor sets for each information tier, plus the heuristic itself."""
    from .sensors import select_random

    X = extract_features(net) if features is None else features
    heuristic = _heuristic_positives(strategy, train_dens, k, eps0)
    reference = select_random(net, k, derive_seed(rng_seed, "tier-reference")).members
    sets = {}
    for name, cols in (("distr-demo", DEMOGRAPHIC), ("distr-inter", INTERACTION)):
        ranges = distribution_criteria(X, heuristic, reference, cols)
        sets[name] = _sample_upto(apply_ranges(X, ranges), k, derive_seed(rng_seed, name))
    pos = heuristic[:_n_positive(net.n, train_frac)]
    idx, y = training_labels(net.n, pos, derive_seed(rng_seed, "tier-labels"))
    for name, cols in (("tree-demo", DEMOGRAPHIC), ("tree-inter", INTERACTION),
                       ("tree-demo+inter", DEMOGRAPHIC + INTERACTION)):
        tree = train_tree(X[idx], y, max_depth, min_leaf, columns=cols)
        sets[name] = _top_by_score(tree.predict_proba(X), k, derive_seed(rng_seed, name))
    sets[strategy.upper()] = heuristic
    return sets


def compare_information_tiers(
    net: ContactNetwork,
    model: DiseaseModel,
    k: int,
    runs: int,
    strategy: str = "DT",
    seeds: int = 5,
    horizon: int = 200,
    rng_seed: int = 0,
    train_frac: float = 0.02,
    eps0: float = 0.1,
    extra_sets: dict | None = None,
    workers: int = 1,
) -> list[TierRow]:
    """Lead time of each information tier against a same-sized random set.

    ``extra_sets`` maps names to further node sets scored on the same
    evaluation runs (rows appended after the tiers).
    """
    from .sensors import select_random

    if not 1 <= k <= net.n:
        raise ValueError(f"k must lie in [1, {net.n}]")
    train = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(rng_seed, "train")), runs, workers)
    evaluate = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(rng_seed, "eval")), runs, workers)
    sets = tier_sensor_sets(net, train.dendrograms, k, strategy, train_frac, eps0, rng_seed)
    sets.update(extra_sets or {})
    rand = select_random(net, k, derive_seed(rng_seed, "random-set")).members
    rows = []
    for name, members in sets.items():
        if len(members) == 0:
            rows.append(TierRow(name, 0, float("nan"), float("nan"), 0, len(evaluate)))
            continue
        sample = run_leads(evaluate, members, rand)
        rows.append(TierRow(name, len(members), sample.mean, sample.variance, int(sample.leads.size),
                            sample.failures))
    return rows
