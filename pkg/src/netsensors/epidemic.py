"""Stochastic SI/SEIR simulation on contact networks, plus ODE oracles.

The network process runs in whole days with a synchronous update: every
transmission, latency exit and recovery on day ``t`` is decided from the
states at the end of day ``t - 1``.  An infectious node transmits across
each incident edge independently with probability
``1 - exp(-beta * duration)``.  When several infectious neighbours succeed
on the same susceptible node, one of them is picked uniformly as its
infector, so the recorded transmissions always form a forest.

Seeds start infectious on day 0.  Exposed nodes do not transmit.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import ContactNetwork
from .rng import stream

SUSCEPTIBLE, EXPOSED, INFECTIOUS, RECOVERED = 0, 1, 2, 3
ROOT = -1


@dataclass(frozen=True)
class DiseaseModel:
    """SI or SEIR parameters.

    ``beta`` is a per-second transmission rate applied to contact durations.
    ``alpha`` (exposed -> infectious) and ``gamma`` (infectious -> recovered)
    are daily rates, used by SEIR only.
    """

    kind: str = "SEIR"
    beta: float = 4.2e-5
    alpha: float | None = 0.5
    gamma: float | None = 0.25

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ("SI", "SEIR"):
            raise ValueError(f"unknown disease model {self.kind!r}")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if kind == "SEIR":
            if self.alpha is None or not self.alpha > 0:
                raise ValueError("SEIR needs alpha > 0")
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("SEIR needs gamma > 0")

    def edge_probability(self, duration) -> np.ndarray:
        return -np.expm1(-self.beta * np.asarray(duration, dtype=float))

    def with_beta(self, beta: float) -> "DiseaseModel":
        return DiseaseModel(self.kind, beta, self.alpha, self.gamma)


@dataclass(frozen=True)
class SimulationConfig:
    """``seeds`` is either a count of random initial infections or explicit node ids."""

    seeds: int | tuple[int, ...] = 5
    horizon: int = 200
    rng_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.seeds, (int, np.integer)):
            object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def check(self, n: int):
        if isinstance(self.seeds, tuple):
            s = np.asarray(self.seeds)
            if len(s) < 1 or len(np.unique(s)) != len(s):
                raise ValueError("explicit seeds must be non-empty and distinct")
            if s.min() < 0 or s.max() >= n:
                raise ValueError("seed node outside the network")
        elif not 1 <= self.seeds <= n:
            raise ValueError(f"seed count must lie in [1, {n}]")


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """One run's transmission forest.

    ``infection_day[v]`` is -1 for nodes never infected; ``infector[v]`` is
    ``ROOT`` (-1) for seeds and uninfected nodes.
    """

    infection_day: np.ndarray
    infector: np.ndarray
    seed_nodes: np.ndarray

    @property
    def n(self) -> int:
        return len(self.infection_day)

    def infected(self) -> np.ndarray:
        return np.flatnonzero(self.infection_day >= 0)

    def depths(self) -> np.ndarray:
        """Generation of each infected node (seeds 0); -1 if never infected."""
        depth = np.full(self.n, -1, dtype=np.int64)
        depth[self.seed_nodes] = 0
        nodes = self.infected()
        nodes = nodes[self.infector[nodes] != ROOT]
        days = self.infection_day[nodes]
        order = np.argsort(days, kind="stable")
        nodes, days = nodes[order], days[order]
        cuts = np.flatnonzero(np.diff(days)) + 1
        # infectors are always infected on an earlier day
        for group in np.split(nodes, cuts):
            depth[group] = depth[self.infector[group]] + 1
        return depth

    def edges(self) -> np.ndarray:
        """Transmission edges as rows ``(infector, infectee)``."""
        child = np.flatnonzero(self.infector != ROOT)
        return np.column_stack([self.infector[child], child])

    def dumps(self) -> str:
        """Text dump: ``node infection_day infector_or_-1`` for every infected node."""
        nodes = self.infected()
        rows = zip(nodes.tolist(), self.infection_day[nodes].tolist(), self.infector[nodes].tolist())
        return "".join(f"{v} {d} {p}\n" for v, d, p in rows)


@dataclass(frozen=True, eq=False)
class Epicurve:
    """Day-indexed cumulative infections (day 0 .. horizon) of a node subset."""

    cumulative: np.ndarray
    population: int

    @classmethod
    def from_days(cls, days, horizon: int, population: int) -> "Epicurve":
        days = np.asarray(days)
        days = days[days >= 0]
        counts = np.bincount(days, minlength=horizon + 1)[: horizon + 1]
        return cls(np.cumsum(counts), population)

    @property
    def incident(self) -> np.ndarray:
        return np.diff(self.cumulative, prepend=0)

    @property
    def days(self) -> np.ndarray:
        return np.arange(len(self.cumulative))

    def to_csv(self) -> str:
        inc = self.incident
        lines = ["day,cumulative,incident"]
        lines.extend(f"{d},{_num(c)},{_num(i)}" for d, c, i in zip(range(len(inc)), self.cumulative.tolist(), inc.tolist()))
        return "\n".join(lines) + "\n"


def _num(x) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _arcs_of(net: ContactNetwork, nodes: np.ndarray):
    starts = net.indptr[nodes]
    counts = net.indptr[nodes + 1] - starts
    total = int(counts.sum())
    offsets = np.repeat(starts - (np.cumsum(counts) - counts), counts)
    return np.arange(total) + offsets, np.repeat(nodes, counts)


def simulate(
    net: ContactNetwork,
    model: DiseaseModel,
    cfg: SimulationConfig,
    rng: np.random.Generator | None = None,
    arc_prob: np.ndarray | None = None,
) -> tuple[Dendrogram, Epicurve]:
    """Run one epidemic; returns its dendrogram and full-population epicurve.

    Without an explicit ``rng`` the run draws from stream ``("run", 0)`` of
    ``cfg.rng_seed``, which makes it identical to run 0 of
    :func:`run_ensemble`.
    """
    n = net.n
    cfg.check(n)
    if rng is None:
        rng = stream(cfg.rng_seed, "run", 0)
    if arc_prob is None:
        arc_prob = model.edge_probability(net.duration)[net.arc_edge]
    seir = model.kind == "SEIR"
    q_latent = -np.expm1(-model.alpha) if seir else 0.0
    q_recover = -np.expm1(-model.gamma) if seir else 0.0

    state = np.zeros(n, dtype=np.int8)
    day = np.full(n, -1, dtype=np.int32)
    infector = np.full(n, ROOT, dtype=np.int32)
    if isinstance(cfg.seeds, tuple):
        seeds = np.array(cfg.seeds, dtype=np.int64)
    else:
        seeds = np.sort(rng.choice(n, size=cfg.seeds, replace=False))
    state[seeds] = INFECTIOUS
    day[seeds] = 0
    infectious = seeds.copy()
    exposed = np.empty(0, dtype=np.int64)
    susceptible = n - seeds.size

    for t in range(1, cfg.horizon + 1):
        if susceptible == 0 or (infectious.size == 0 and exposed.size == 0):
            break
        new = np.empty(0, dtype=np.int64)
        if infectious.size:
            arcs, src = _arcs_of(net, infectious)
            tgt = net.neighbors[arcs]
            open_ = state[tgt] == SUSCEPTIBLE
            arcs, src, tgt = arcs[open_], src[open_], tgt[open_]
            hit = rng.random(arcs.size) < arc_prob[arcs]
            src, tgt = src[hit], tgt[hit]
            if tgt.size:
                perm = rng.permutation(tgt.size)
                new, first = np.unique(tgt[perm], return_index=True)
                infector[new] = src[perm][first]
                day[new] = t
                susceptible -= new.size

        if seir:
            moving = rng.random(exposed.size) < q_latent
            recovering = rng.random(infectious.size) < q_recover
            state[exposed[moving]] = INFECTIOUS
            state[infectious[recovering]] = RECOVERED
            state[new] = EXPOSED
            infectious = np.concatenate([infectious[~recovering], exposed[moving]])
            exposed = np.concatenate([exposed[~moving], new])
        else:
            state[new] = INFECTIOUS
            infectious = np.concatenate([infectious, new])

    den = Dendrogram(day, infector, seeds)
    return den, Epicurve.from_days(day, cfg.horizon, n)


@dataclass(eq=False)
class Ensemble:
    """Independent runs sharing one network, model and configuration."""

    dendrograms: list[Dendrogram]
    horizon: int
    mean: Epicurve = field(init=False)

    def __post_init__(self):
        n = self.dendrograms[0].n
        total = np.zeros(self.horizon + 1)
        for den in self.dendrograms:
            total += Epicurve.from_days(den.infection_day, self.horizon, n).cumulative
        self.mean = Epicurve(total / len(self.dendrograms), n)

    def __len__(self):
        return len(self.dendrograms)

    def infection_days(self) -> np.ndarray:
        """Matrix (runs x nodes) of infection days, -1 where not infected."""
        return np.vstack([d.infection_day for d in self.dendrograms])


def _run_chunk(net, model, cfg, indices):
    arc_prob = model.edge_probability(net.duration)[net.arc_edge]
    return [simulate(net, model, cfg, stream(cfg.rng_seed, "run", i), arc_prob)[0] for i in indices]


def run_ensemble(
    net: ContactNetwork,
    model: DiseaseModel,
    cfg: SimulationConfig,
    runs: int,
    workers: int = 1,
) -> Ensemble:
    """``runs`` independent simulations; run ``i`` uses stream ``("run", i)``.

    With ``workers > 1`` the runs are spread over processes.  Each run owns
    its stream, so results do not depend on the worker count.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cfg.check(net.n)
    if workers <= 1:
        dens = _run_chunk(net, model, cfg, range(runs))
    else:
        chunks = [range(i, runs, workers) for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*[(net, model, cfg, c) for c in chunks])))
        dens = [None] * runs
        for c, part in zip(chunks, parts):
            for i, d in zip(c, part):
                dens[i] = d
    return Ensemble(dens, cfg.horizon)


# --------------------------------------------------------------------------
# deterministic oracles (forward Euler)

def _grid(horizon: float, dt: float):
    steps = int(round(horizon / dt))
    return steps, np.arange(steps + 1) * dt


def ode_si(n: float, beta: float, i0: float, horizon: float, dt: float = 1e-3):
    """Integrate ``dI/dt = beta (N - I) I``; returns ``(t, I)``."""
    if not 0 < i0 < n:
        raise ValueError("need 0 < i0 < n")
    if dt > 0.01:
        raise ValueError("dt must be <= 0.01")
    steps, t = _grid(horizon, dt)
    out = np.empty(steps + 1)
    i = float(i0)
    out[0] = i
    for s in range(1, steps + 1):
        i += dt * beta * (n - i) * i
        out[s] = i
    return t, out


def logistic_si(n: float, beta: float, i0: float, t) -> np.ndarray:
    """Closed-form solution of the SI equation."""
    t = np.asarray(t, dtype=float)
    return n / (1.0 + (n - i0) / i0 * np.exp(-beta * n * t))


def ode_seir(n: float, beta: float, alpha: float, gamma: float, e0: float, i0: float,
             horizon: float, dt: float = 1e-3):
    """Integrate the SEIR system with mass-action ``beta S I``.

    Returns ``(t, S, E, I, R)`` with ``S(0) = n - e0 - i0`` and ``R(0) = 0``.
    """
    if dt > 0.01:
        raise ValueError("dt must be <= 0.01")
    if e0 < 0 or i0 < 0 or e0 + i0 > n:
        raise ValueError("initial compartments must be within [0, n]")
    steps, t = _grid(horizon, dt)
    out = np.empty((4, steps + 1))
    s, e, i, r = n - e0 - i0, float(e0), float(i0), 0.0
    out[:, 0] = s, e, i, r
    for k in range(1, steps + 1):
        inf = beta * s * i
        lat = alpha * e
        rec = gamma * i
        s, e, i, r = s - dt * inf, e + dt * (inf - lat), i + dt * (lat - rec), r + dt * rec
        out[:, k] = s, e, i, r
    return t, out[0], out[1], out[2], out[3]


def ode_sir(n: float, beta: float, gamma: float, i0: float, horizon: float, dt: float = 1e-3):
    """Integrate SIR (``beta S I`` infection, ``gamma I`` recovery); returns ``(t, S, I, R)``."""
    if dt > 0.01:
        raise ValueError("dt must be <= 0.01")
    steps, t = _grid(horizon, dt)
    out = np.empty((3, steps + 1))
    s, i, r = n - i0, float(i0), 0.0
    out[:, 0] = s, i, r
    for k in range(1, steps + 1):
        inf = beta * s * i
        rec = gamma * i
        s, i, r = s - dt * inf, i + dt * (inf - rec), r + dt * rec
        out[:, k] = s, i, r
    return t, out[0], out[1], out[2]


def mean_cumulative(ens: Ensemble, nodes: Sequence[int] | None = None) -> np.ndarray:
    """Mean cumulative curve of ``nodes`` (all nodes by default) over the ensemble."""
    if nodes is None:
        return ens.mean.cumulative
    nodes = np.asarray(nodes)
    total = np.zeros(ens.horizon + 1)
    for den in ens.dendrograms:
        total += Epicurve.from_days(den.infection_day[nodes], ens.horizon, len(nodes)).cumulative
    return total / len(ens)
