"""Experiment protocols shared by the command line and the demos.

Every stochastic stage draws from a named stream of one master seed.  Lead
times are measured in two phases: a *training* ensemble supplies the
dendrograms that sensor selection sees, and a disjoint *evaluation*
ensemble (different stream) supplies the outbreaks on which lead time is
measured, so sensors are never scored on the runs that picked them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .epicurve import run_leads
from .epidemic import DiseaseModel, Ensemble, SimulationConfig, run_ensemble
from .graph import ContactNetwork
from .rng import derive_seed
from .sensors import (
    SensorSet,
    select_dt,
    select_greedy_mait,
    select_random,
    select_topk_degree,
    select_tt,
    select_weighted_degree,
)

STRATEGIES = ("TopK", "WD", "TT", "DT", "MAIT", "random")


def choose_sensors(strategy: str, net: ContactNetwork, train: Ensemble, k: int, eps0: float = 0.1,
                   eps: float = 0.8, K: int = 3, sample_size: int | None = None, rng_seed: int = 0) -> SensorSet:
    """Dispatch to a selection strategy by name (case-insensitive)."""
    s = strategy.lower()
    if s == "tt":
        return select_tt(train.dendrograms, k, eps0)
    if s == "dt":
        return select_dt(train.dendrograms, k, eps0)
    if s == "mait":
        return select_greedy_mait(train.dendrograms, k, eps, eps0)
    if s == "topk":
        return select_topk_degree(net, k, sample_size, K, rng_seed)
    if s == "wd":
        return select_weighted_degree(net, k, sample_size, K, rng_seed)
    if s == "random":
        return select_random(net, k, rng_seed)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")


def resolve_k(k: float, n: int) -> int:
    """``k`` below 1 is a fraction of the population, otherwise a count."""
    if k <= 0:
        raise ValueError("k must be positive")
    kk = int(round(k * n)) if k < 1 else int(k)
    if kk > n:
        raise ValueError(f"k={kk} exceeds the population size {n}")
    return max(1, kk)


@dataclass(frozen=True)
class LeadRow:
    network: str
    seeds: int
    strategy: str
    k: int
    mean_lead: float
    var_lead: float
    n_ok: int
    n_fail: int


def phase_ensembles(net, model, seeds, runs, horizon, master_seed, workers=1):
    """Training and evaluation ensembles on disjoint streams."""
    train = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(master_seed, "train", seeds)),
                         runs, workers)
    evaluate = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(master_seed, "eval", seeds)),
                            runs, workers)
    return train, evaluate


def leadtime_experiment(
    net: ContactNetwork,
    model: DiseaseModel,
    seed_counts: Sequence[int] = (1, 5, 10),
    runs: int = 200,
    k: float = 0.05,
    horizon: int = 200,
    master_seed: int = 0,
    strategies: Sequence[str] = ("TopK", "WD", "TT", "DT"),
    eps0: float = 0.1,
    eps: float = 0.8,
    K: int = 3,
    sample_size: int | None = None,
    network: str = "network",
    workers: int = 1,
) -> list[LeadRow]:
    """Mean lead time of each strategy against a same-sized random set."""
    kk = resolve_k(k, net.n)
    rand = select_random(net, kk, derive_seed(master_seed, "random-set"))
    rows = []
    for seeds in seed_counts:
        train, evaluate = phase_ensembles(net, model, seeds, runs, horizon, master_seed, workers)
        for strategy in strategies:
            sensors = choose_sensors(strategy, net, train, kk, eps0=eps0, eps=eps, K=K, sample_size=sample_size,
                                     rng_seed=derive_seed(master_seed, "nominate", seeds))
            sample = run_leads(evaluate, sensors.members, rand.members)
            rows.append(LeadRow(network, int(seeds), strategy, kk, sample.mean, sample.variance,
                                int(sample.leads.size), sample.failures))
    return rows


# --------------------------------------------------------------------------
# CSV helpers

def fmt(x) -> str:
    """Stable text form for CSV cells (``n/a`` for NaN, ``inf`` for +inf)."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "n/a"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".10g")
    if x is None:
        return "n/a"
    return str(x)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def dataclass_csv(rows: Sequence) -> str:
    if not rows:
        raise ValueError("no rows")
    header = list(asdict(rows[0]).keys())
    return to_csv(header, [list(asdict(r).values()) for r in rows])


def strategy_table_csv(rows: Sequence[LeadRow], strategies: Sequence[str]) -> str:
    """Wide layout: one line per (network, seeds), one mean-lead column per strategy."""
    keys = []
    cell = {}
    for r in rows:
        key = (r.network, r.seeds)
        if key not in cell:
            keys.append(key)
            cell[key] = {}
        cell[key][r.strategy] = r.mean_lead
    body = [[net, seeds] + [cell[(net, seeds)].get(s, float("nan")) for s in strategies] for net, seeds in keys]
    return to_csv(["network", "seeds"] + list(strategies), body)
