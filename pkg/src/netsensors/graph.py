"""Contact networks: data model, canonical file I/O and synthetic generators.

A :class:`ContactNetwork` is an undirected multigraph whose nodes carry
demographics (age, gender, income) and whose edges carry a contact duration
in seconds and a meeting type.  Parallel edges are distinct meetings.

Two generators stand in for city-scale synthetic populations:

* :func:`generate_starlike` -- sparse, hub-dominated (router-graph-like).
* :func:`generate_citylike` -- dense, degree-concentrated, with households,
  schools and workplaces, so that school-age children form a tightly
  connected, long-contact cluster.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .rng import stream

HOME, WORK, SHOP, VISIT, SCHOOL, OTHER = 1, 2, 3, 4, 5, 6
MEETING_TYPES = (HOME, WORK, SHOP, VISIT, SCHOOL, OTHER)

GENDER_UNKNOWN, GENDER_MALE, GENDER_FEMALE = 0, 1, 2
GENDERS = (GENDER_UNKNOWN, GENDER_MALE, GENDER_FEMALE)
MAX_AGE = 130


class NetworkFormatError(ValueError):
    """Raised when a network file or edge list violates the format/invariants."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DegreeStats(NamedTuple):
    n: int
    avg_degree: float
    max_degree: int


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ContactNetwork:
    """Immutable contact network.

    Node ``i`` has demographics ``age[i]``, ``gender[i]``, ``income[i]``.
    Edge ``e`` joins ``u[e]`` and ``v[e]`` for ``duration[e]`` seconds with
    meeting type ``meeting_type[e]`` (1 home, 2 work, 3 shop, 4 visit,
    5 school, 6 other).

    The adjacency is stored as CSR arrays: the arcs of node ``x`` are
    ``indptr[x]:indptr[x+1]``; ``neighbors`` holds the other endpoint and
    ``arc_edge`` the edge index of each arc.
    """

    age: np.ndarray
    gender: np.ndarray
    income: np.ndarray
    u: np.ndarray
    v: np.ndarray
    duration: np.ndarray
    meeting_type: np.ndarray
    indptr: np.ndarray = field(init=False, repr=False)
    neighbors: np.ndarray = field(init=False, repr=False)
    arc_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        put = object.__setattr__
        put(self, "age", _frozen(self.age, np.int64))
        put(self, "gender", _frozen(self.gender, np.int64))
        put(self, "income", _frozen(self.income, np.int64))
        put(self, "u", _frozen(self.u, np.int64))
        put(self, "v", _frozen(self.v, np.int64))
        put(self, "duration", _frozen(self.duration, np.float64))
        put(self, "meeting_type", _frozen(self.meeting_type, np.int64))
        self._validate()

        n = self.n
        src = np.concatenate([self.u, self.v])
        dst = np.concatenate([self.v, self.u])
        eid = np.concatenate([np.arange(self.m), np.arange(self.m)])
        order = np.lexsort((eid, dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        put(self, "indptr", _frozen(indptr, np.int64))
        put(self, "neighbors", _frozen(dst[order], np.int64))
        put(self, "arc_edge", _frozen(eid[order], np.int64))

    def _validate(self):
        n = len(self.age)
        if not (len(self.gender) == len(self.income) == n):
            raise NetworkFormatError("demographic arrays differ in length")
        m = len(self.u)
        if not (len(self.v) == len(self.duration) == len(self.meeting_type) == m):
            raise NetworkFormatError("edge arrays differ in length")
        if n and (self.age.min() < 0 or self.age.max() > MAX_AGE):
            raise NetworkFormatError(f"age outside [0, {MAX_AGE}]")
        if n and not np.isin(self.gender, GENDERS).all():
            raise NetworkFormatError("gender outside {0, 1, 2}")
        if n and self.income.min() < 0:
            raise NetworkFormatError("negative income")
        if m:
            if min(self.u.min(), self.v.min()) < 0 or max(self.u.max(), self.v.max()) >= n:
                raise NetworkFormatError("edge references an undeclared node")
            if (self.u == self.v).any():
                raise NetworkFormatError("self-loop")
            if not (self.duration >= 0).all():
                raise NetworkFormatError("negative duration")
            if not np.isin(self.meeting_type, MEETING_TYPES).all():
                raise NetworkFormatError("meeting type outside 1..6")

    @property
    def n(self) -> int:
        return len(self.age)

    @property
    def m(self) -> int:
        return len(self.u)

    def degree(self) -> np.ndarray:
        """Number of incident edges per node (parallel edges each count)."""
        return np.diff(self.indptr)

    def weighted_degree(self) -> np.ndarray:
        """Sum of incident contact durations per node, in seconds."""
        w = np.bincount(self.u, weights=self.duration, minlength=self.n)
        w += np.bincount(self.v, weights=self.duration, minlength=self.n)
        return w

    def neighbors_of(self, x: int) -> np.ndarray:
        """Distinct neighbours of ``x``, ascending."""
        return np.unique(self.neighbors[self.indptr[x]:self.indptr[x + 1]])

    def edge_set(self) -> set[tuple[int, int]]:
        lo = np.minimum(self.u, self.v)
        hi = np.maximum(self.u, self.v)
        return set(zip(lo.tolist(), hi.tolist()))

    def has_edge(self, a: int, b: int) -> bool:
        arcs = self.neighbors[self.indptr[a]:self.indptr[a + 1]]
        return bool((arcs == b).any())

    def __repr__(self):
        return f"ContactNetwork(n={self.n}, m={self.m})"


def from_edges(n, edges, durations=None, meeting_types=None, age=None, gender=None, income=None):
    """Convenience constructor from a list of ``(u, v)`` pairs.

    Missing attributes default to duration 1, type 6 (other), age 0,
    unknown gender and zero income.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = len(edges)
    return ContactNetwork(
        age=np.zeros(n, np.int64) if age is None else age,
        gender=np.zeros(n, np.int64) if gender is None else gender,
        income=np.zeros(n, np.int64) if income is None else income,
        u=edges[:, 0],
        v=edges[:, 1],
        duration=np.ones(m) if durations is None else durations,
        meeting_type=np.full(m, OTHER) if meeting_types is None else meeting_types,
    )


def complete_graph(n: int, duration: float = 1.0) -> ContactNetwork:
    iu, iv = np.triu_indices(n, k=1)
    return from_edges(n, np.column_stack([iu, iv]), durations=np.full(len(iu), float(duration)))


def star_graph(leaves: int, duration: float = 1.0) -> ContactNetwork:
    edges = [(0, i) for i in range(1, leaves + 1)]
    return from_edges(leaves + 1, edges, durations=np.full(leaves, float(duration)))


def degree_stats(net: ContactNetwork) -> DegreeStats:
    n = net.n
    if n == 0:
        return DegreeStats(0, 0.0, 0)
    return DegreeStats(n, 2.0 * net.m / n, int(net.degree().max()))


# --------------------------------------------------------------------------
# file I/O

def _fmt_duration(x: float) -> str:
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _parse_number(tok: str, line: int, what: str, integer: bool):
    try:
        val = float(tok)
    except ValueError:
        raise NetworkFormatError(f"cannot parse {what} {tok!r}", line) from None
    if not np.isfinite(val):
        raise NetworkFormatError(f"non-finite {what}", line)
    if integer:
        if not val.is_integer():
            raise NetworkFormatError(f"{what} must be an integer, got {tok!r}", line)
        return int(val)
    return val


def _data_lines(path):
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if text:
                yield lineno, text.split()


def _check_edge(u, v, dur, mtype, n, lineno):
    if u == v:
        raise NetworkFormatError(f"self-loop on node {u} rejected", lineno)
    if n is not None and not (0 <= u < n and 0 <= v < n):
        raise NetworkFormatError(f"edge ({u}, {v}) references an undeclared node", lineno)
    if u < 0 or v < 0:
        raise NetworkFormatError("negative node id", lineno)
    if dur < 0:
        raise NetworkFormatError(f"negative duration {dur}", lineno)
    if mtype not in MEETING_TYPES:
        raise NetworkFormatError(f"meeting type {mtype} outside 1..6", lineno)


def load_network(path, format: str = "attributed") -> ContactNetwork:
    """Read a network file.

    ``format="attributed"`` expects the canonical layout: a header ``N M``,
    then ``N`` lines ``id age gender income``, then ``M`` lines
    ``u v duration_seconds meeting_type``.  ``format="edge-list"`` expects
    lines ``u v [duration [meeting_type]]`` (defaults 1 and 6); the node
    count is one more than the largest id.  ``#`` starts a comment.
    """
    if format == "attributed":
        return _load_attributed(path)
    if format == "edge-list":
        return _load_edge_list(path)
    raise ValueError(f"unknown network format {format!r}")


def _load_attributed(path) -> ContactNetwork:
    lines = _data_lines(path)
    try:
        lineno, head = next(lines)
    except StopIteration:
        raise NetworkFormatError("empty file") from None
    if len(head) != 2:
        raise NetworkFormatError("header must be 'N M'", lineno)
    n = _parse_number(head[0], lineno, "node count", True)
    m = _parse_number(head[1], lineno, "edge count", True)
    if n < 0 or m < 0:
        raise NetworkFormatError("negative counts in header", lineno)

    age = np.zeros(n, np.int64)
    gender = np.zeros(n, np.int64)
    income = np.zeros(n, np.int64)
    seen = np.zeros(n, bool)
    for _ in range(n):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise NetworkFormatError(f"expected {n} node lines") from None
        if len(tok) != 4:
            raise NetworkFormatError("node line must be 'id age gender income'", lineno)
        i, a, g, inc = (_parse_number(t, lineno, w, True) for t, w in zip(tok, ("id", "age", "gender", "income")))
        if not 0 <= i < n:
            raise NetworkFormatError(f"node id {i} outside [0, {n})", lineno)
        if seen[i]:
            raise NetworkFormatError(f"duplicate node id {i}", lineno)
        if not 0 <= a <= MAX_AGE:
            raise NetworkFormatError(f"age {a} outside [0, {MAX_AGE}]", lineno)
        if g not in GENDERS:
            raise NetworkFormatError(f"gender {g} outside {{0, 1, 2}}", lineno)
        if inc < 0:
            raise NetworkFormatError("negative income", lineno)
        seen[i] = True
        age[i], gender[i], income[i] = a, g, inc

    us, vs, durs, types = [], [], [], []
    for _ in range(m):
        try:
            lineno, tok = next(lines)
        except StopIteration:
            raise NetworkFormatError(f"expected {m} edge lines") from None
        if len(tok) != 4:
            raise NetworkFormatError("edge line must be 'u v duration meeting_type'", lineno)
        u = _parse_number(tok[0], lineno, "node id", True)
        v = _parse_number(tok[1], lineno, "node id", True)
        dur = _parse_number(tok[2], lineno, "duration", False)
        mt = _parse_number(tok[3], lineno, "meeting type", True)
        _check_edge(u, v, dur, mt, n, lineno)
        us.append(u), vs.append(v), durs.append(dur), types.append(mt)
    extra = next(lines, None)
    if extra is not None:
        raise NetworkFormatError("trailing data after declared edges", extra[0])
    return ContactNetwork(age, gender, income, us, vs, np.array(durs, float), types)


def _load_edge_list(path) -> ContactNetwork:
    us, vs, durs, types = [], [], [], []
    for lineno, tok in _data_lines(path):
        if not 2 <= len(tok) <= 4:
            raise NetworkFormatError("edge line must be 'u v [duration [meeting_type]]'", lineno)
        u = _parse_number(tok[0], lineno, "node id", True)
        v = _parse_number(tok[1], lineno, "node id", True)
        dur = _parse_number(tok[2], lineno, "duration", False) if len(tok) > 2 else 1.0
        mt = _parse_number(tok[3], lineno, "meeting type", True) if len(tok) > 3 else OTHER
        _check_edge(u, v, dur, mt, None, lineno)
        us.append(u), vs.append(v), durs.append(dur), types.append(mt)
    n = max(max(us, default=-1), max(vs, default=-1)) + 1
    z = np.zeros(n, np.int64)
    return ContactNetwork(z, z, z, us, vs, np.array(durs, float), types)


def network_to_text(net: ContactNetwork) -> str:
    """Canonical attributed text form (deterministic, byte-stable)."""
    out = [f"{net.n} {net.m}"]
    out.extend(
        f"{i} {a} {g} {inc}"
        for i, (a, g, inc) in enumerate(zip(net.age.tolist(), net.gender.tolist(), net.income.tolist()))
    )
    out.extend(
        f"{u} {v} {_fmt_duration(d)} {t}"
        for u, v, d, t in zip(net.u.tolist(), net.v.tolist(), net.duration.tolist(), net.meeting_type.tolist())
    )
    return "\n".join(out) + "\n"


def save_network(net: ContactNetwork, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(network_to_text(net))
    os.replace(tmp, path)


# --------------------------------------------------------------------------
# generators

# age bands: toddlers, school age, working age, elderly
_AGE_BANDS = ((0, 4), (5, 20), (21, 64), (65, 90))
_AGE_WEIGHTS = (0.06, 0.22, 0.57, 0.15)


def _sample_demographics(rng, n):
    band = rng.choice(len(_AGE_BANDS), size=n, p=_AGE_WEIGHTS)
    lo = np.array([b[0] for b in _AGE_BANDS])[band]
    hi = np.array([b[1] for b in _AGE_BANDS])[band]
    age = rng.integers(lo, hi + 1)
    gender = rng.integers(1, 3, size=n)
    income = np.zeros(n, np.int64)
    working = (age >= 21) & (age <= 64)
    income[working] = np.round(rng.lognormal(10.6, 0.6, working.sum())).astype(np.int64)
    retired = age >= 65
    income[retired] = np.round(rng.lognormal(9.9, 0.5, retired.sum())).astype(np.int64)
    teen = (age >= 16) & (age <= 20)
    income[teen] = np.round(rng.lognormal(8.0, 0.8, teen.sum()) * (rng.random(teen.sum()) < 0.4)).astype(np.int64)
    return age, gender, income


def generate_starlike(n: int, hub_fraction: float = 0.01, seed: int = 0, m: int = 2) -> ContactNetwork:
    """Sparse hub-dominated network.

    The first ``max(2, round(hub_fraction * n))`` nodes are hubs joined in a
    ring.  Every later node attaches one edge to a hub, hub ``i`` being
    chosen with probability proportional to ``1 / (i + 1)``, and ``m - 1``
    further edges by ordinary preferential attachment over all earlier
    nodes.  Every node is therefore one hop from a hub and the graph is
    connected.  The Zipf hub weights give the largest hub a degree near a
    fifth of the population, as in autonomous-system peering graphs.

    Contact durations are drawn around 1200 s, which at a transmission rate
    of 4.2e-5 per second gives roughly a 5% per-day edge probability.
    """
    if n < 10:
        raise ValueError(f"starlike network needs n >= 10, got {n}")
    if not 0 < hub_fraction < 0.1:
        raise ValueError(f"hub_fraction must lie in (0, 0.1), got {hub_fraction}")
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = stream(seed, "starlike")
    h = max(2, int(round(hub_fraction * n)))

    us: list[int] = []
    vs: list[int] = []
    hub_cdf = np.cumsum(1.0 / np.arange(1, h + 1))
    hub_cdf /= hub_cdf[-1]
    # degree-weighted endpoint pool for preferential sampling
    pool: list[int] = []

    def add(a, b):
        us.append(a)
        vs.append(b)
        pool.append(a)
        pool.append(b)

    if h == 2:
        add(0, 1)
    else:
        for i in range(h):
            add(i, (i + 1) % h)

    u01 = rng.random((n, m))
    for x in range(h, n):
        hub = int(np.searchsorted(hub_cdf, u01[x, 0], side="right"))
        chosen = {x, hub}
        add(x, hub)
        for j in range(1, m):
            y = pool[int(u01[x, j] * len(pool))]
            if y in chosen:
                continue
            chosen.add(y)
            add(x, y)

    mm = len(us)
    age, gender, income = _sample_demographics(rng, n)
    duration = np.round(np.clip(rng.lognormal(np.log(1200.0), 0.25, mm), 60, 7200))
    mtype = rng.choice(MEETING_TYPES, size=mm)
    return ContactNetwork(age, gender, income, us, vs, duration, mtype)


def _pairs_within(rng, members: np.ndarray, per_node: float):
    """Random simple graph on ``members`` with mean degree about ``per_node``."""
    c = len(members)
    if c < 2:
        return np.empty((0, 2), np.int64)
    total = c * (c - 1) // 2
    want = min(total, int(round(c * per_node / 2)))
    iu, iv = np.triu_indices(c, k=1)
    pick = np.sort(rng.choice(total, size=want, replace=False))
    return np.column_stack([members[iu[pick]], members[iv[pick]]])


def generate_citylike(
    n: int,
    target_avg_degree: float = 20.0,
    seed: int = 0,
    school_share: float = 0.7,
    work_share: float = 0.45,
    work_duration: float = 600.0,
    community_duration: float = 200.0,
    home_duration: tuple[float, float] = (7200.0, 21600.0),
) -> ContactNetwork:
    """Dense, degree-concentrated synthetic city.

    Layers, in order:

    * households of 1-6 people, fully connected, long home contacts;
    * school classes for ages 5-20: each pupil gets about
      ``school_share * target_avg_degree`` classmates, 6-9 hour contacts
      (type 5, or type 2 for ages 18-20 in college/work);
    * workplaces for 80% of ages 21-64 with about
      ``work_share * target_avg_degree`` colleagues and mostly short
      contacts (median 40 min);
    * short shop/visit/other contacts filling the remaining edge budget so
      the mean degree equals the target, drawn mostly among adults.

    Pupils thus form a cluster of long, highly transmissive contacts while
    adults carry most of the degree, which is the regime where degree-based
    sensor nomination fails.
    """
    if n < 100:
        raise ValueError(f"citylike network needs n >= 100, got {n}")
    if target_avg_degree < 4:
        raise ValueError(f"target_avg_degree must be >= 4, got {target_avg_degree}")
    rng = stream(seed, "citylike")
    age, gender, income = _sample_demographics(rng, n)
    target_m = int(round(target_avg_degree * n / 2))

    blocks = []  # (pairs, durations, types)

    # households
    order = rng.permutation(n)
    sizes = rng.choice(np.arange(1, 7), size=n, p=[0.22, 0.30, 0.18, 0.16, 0.09, 0.05])
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    bounds = bounds[bounds < n]
    bounds = np.append(bounds, n)
    home = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        members = order[a:b]
        if len(members) > 1:
            iu, iv = np.triu_indices(len(members), k=1)
            home.append(np.column_stack([members[iu], members[iv]]))
    home = np.concatenate(home) if home else np.empty((0, 2), np.int64)
    blocks.append((home, rng.uniform(*home_duration, len(home)), np.full(len(home), HOME)))

    # schools: classes grouped by age
    pupils = np.flatnonzero((age >= 5) & (age <= 20))
    per_pupil = school_share * target_avg_degree
    class_size = max(8, int(round(1.6 * per_pupil)))
    pupils = pupils[np.lexsort((rng.random(len(pupils)), age[pupils]))]
    school_pairs = [
        _pairs_within(rng, pupils[i:i + class_size], per_pupil)
        for i in range(0, len(pupils), class_size)
    ]
    school = np.concatenate(school_pairs) if school_pairs else np.empty((0, 2), np.int64)
    older = (age[school[:, 0]] >= 18) & (age[school[:, 1]] >= 18)
    stype = np.where(older & (rng.random(len(school)) < 0.5), WORK, SCHOOL)
    blocks.append((school, rng.uniform(21600, 32400, len(school)), stype))

    # workplaces
    adults = np.flatnonzero((age >= 21) & (age <= 64))
    workers = rng.permutation(adults[rng.random(len(adults)) < 0.8])
    per_worker = work_share * target_avg_degree
    shop_size = max(6, int(round(1.6 * per_worker)))
    work_pairs = [
        _pairs_within(rng, workers[i:i + shop_size], per_worker)
        for i in range(0, len(workers), shop_size)
    ]
    work = np.concatenate(work_pairs) if work_pairs else np.empty((0, 2), np.int64)
    wdur = np.clip(rng.lognormal(np.log(work_duration), 0.9, len(work)), 300, 28800)
    blocks.append((work, wdur, np.full(len(work), WORK)))

    # community contacts fill the remaining budget
    used = sum(len(p) for p, _, _ in blocks)
    budget = max(0, target_m - used)
    weight = np.where((age >= 21) & (age <= 64), 1.0, np.where(age >= 65, 0.8, 0.15))
    weight /= weight.sum()
    a = rng.choice(n, size=budget, p=weight)
    b = rng.choice(n, size=budget, p=weight)
    clash = a == b
    while clash.any():
        b[clash] = rng.choice(n, size=int(clash.sum()), p=weight)
        clash = a == b
    comm = np.column_stack([a, b])
    cdur = np.clip(rng.lognormal(np.log(community_duration), 0.8, budget), 60, 14400)
    ctype = rng.choice([SHOP, VISIT, OTHER], size=budget, p=[0.4, 0.3, 0.3])
    blocks.append((comm, cdur, ctype))

    pairs = np.concatenate([p for p, _, _ in blocks])
    dur = np.round(np.concatenate([d for _, d, _ in blocks]))
    mtype = np.concatenate([t for _, _, t in blocks])
    if len(pairs) > target_m:
        keep = np.sort(rng.choice(len(pairs), size=target_m, replace=False))
        pairs, dur, mtype = pairs[keep], dur[keep], mtype[keep]
    return ContactNetwork(age, gender, income, pairs[:, 0], pairs[:, 1], dur, mtype)
