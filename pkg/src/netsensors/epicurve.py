"""Epicurve analytics: logistic fits, peak and lead time, dispersion sweeps,
observation-window stability and cubic population-curve prediction.

Peaks are read from a logistic fitted to the *cumulative* curve.  The daily
incidence of a logistic ``L / (1 + exp(-r (t - t0)))`` is its derivative,
which is symmetric about and maximal at ``t0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .epidemic import Dendrogram, DiseaseModel, Ensemble, Epicurve, SimulationConfig, run_ensemble
from .graph import ContactNetwork
from .rng import derive_seed


class NoFitError(ValueError):
    """The series carries no usable signal for a logistic fit."""


# --------------------------------------------------------------------------
# restriction

def restrict_epicurve(source, nodes, horizon: int | None = None) -> Epicurve:
    """Cumulative infections among ``nodes`` by day.

    ``source`` is a :class:`Dendrogram` or an array of infection days
    (-1 for never infected).  ``horizon`` defaults to the last infection day.
    """
    nodes = np.asarray(list(nodes) if not isinstance(nodes, np.ndarray) else nodes, dtype=np.int64)
    if nodes.size == 0:
        raise ValueError("node set must be non-empty")
    days = source.infection_day if isinstance(source, Dendrogram) else np.asarray(source)
    if horizon is None:
        horizon = max(int(days.max()), 0)
    return Epicurve.from_days(days[nodes], horizon, len(nodes))


# --------------------------------------------------------------------------
# logistic fitting

def logistic(t, L, r, t0):
    return L / (1.0 + np.exp(-r * (np.asarray(t, dtype=float) - t0)))


def logistic_rate(t, L, r, t0):
    """Derivative of :func:`logistic` with respect to ``t`` (fitted daily incidence)."""
    z = np.exp(-r * (np.asarray(t, dtype=float) - t0))
    return L * r * z / (1.0 + z) ** 2


@dataclass(frozen=True)
class LogisticFit:
    L: float
    r: float
    t0: float
    rss: float
    converged: bool = True
    method: str = "gauss-newton"
    # peak not yet inside the observed window, or fit came from the grid fallback
    low_confidence: bool = False

    def __call__(self, t):
        return logistic(t, self.L, self.r, self.t0)

    def incidence(self, t):
        return logistic_rate(t, self.L, self.r, self.t0)


def _first_crossing(y, level) -> int:
    return int(np.argmax(y >= level))


def _initial_guess(t, y):
    top = y.max()
    L0 = 1.05 * top
    t0 = t[_first_crossing(y, 0.5 * top)]
    t25 = t[_first_crossing(y, 0.25 * top)]
    t75 = t[_first_crossing(y, 0.75 * top)]
    span = t75 - t25
    # logit(0.75) - logit(0.25) = 2 ln 3
    r0 = 2.0 * np.log(3.0) / span if span > 0 else 1.0
    return L0, r0, float(t0)


def _residual_jac(t, y, p):
    logL, logr, t0 = p
    L, r = np.exp(logL), np.exp(logr)
    s = 1.0 / (1.0 + np.exp(-r * (t - t0)))
    f = L * s
    ds = s * (1.0 - s)
    jac = np.column_stack([f, L * ds * r * (t - t0), -L * ds * r])
    return f - y, jac


def _gauss_newton(t, y, p, tol, max_iter):
    """Levenberg-damped Gauss-Newton in (log L, log r, t0)."""
    res, jac = _residual_jac(t, y, p)
    rss = float(res @ res)
    floor = 1e-28 * max(float(y @ y), 1.0)
    lam = 1e-3
    for _ in range(max_iter):
        if rss <= floor:
            return p, rss, True
        g = jac.T @ res
        a = jac.T @ jac
        improved = False
        while lam < 1e12:
            step = np.linalg.solve(a + lam * np.diag(np.diag(a) + 1e-12), -g)
            cand = p + step
            if not np.all(np.isfinite(cand)) or abs(cand[1]) > 50:
                lam *= 10
                continue
            res_c, jac_c = _residual_jac(t, y, cand)
            rss_c = float(res_c @ res_c)
            if rss_c <= rss:
                improved = True
                break
            lam *= 10
        if not improved:
            # no descent direction left: at a (possibly flat) minimum
            return p, rss, True
        change = (rss - rss_c) / max(rss, floor)
        p, res, jac, rss = cand, res_c, jac_c, rss_c
        lam = max(lam / 10, 1e-12)
        if change < tol:
            return p, rss, True
    return p, rss, False


def _grid_fit(t, y, t_lo, t_hi):
    L = float(y.max())
    best = (np.inf, 1.0, float(t.mean()))
    for r in np.geomspace(1e-3, 5.0, 80):
        t0s = np.linspace(t_lo, t_hi, 241)
        pred = L / (1.0 + np.exp(-r * (t[None, :] - t0s[:, None])))
        rss = ((pred - y[None, :]) ** 2).sum(axis=1)
        i = int(np.argmin(rss))
        if rss[i] < best[0]:
            best = (float(rss[i]), float(r), float(t0s[i]))
    return L, best[1], best[2], best[0]


def fit_logistic(curve, days=None, tol: float = 1e-10, max_iter: int = 500) -> LogisticFit:
    """Least-squares logistic fit to a cumulative series.

    ``curve`` is an :class:`Epicurve` or an array indexed by day (or by
    ``days`` when given).  Start values: asymptote 1.05 x max, midpoint at
    the half-max crossing, rate from the 25%/75% crossing days.  Damped
    Gauss-Newton refines until the relative RSS change drops below ``tol``;
    if it fails or leaves the admissible region (midpoint within the
    observed span widened by 50% each side) a coarse (rate, midpoint) grid
    with the asymptote fixed at the maximum is used instead.
    """
    y = np.asarray(curve.cumulative if isinstance(curve, Epicurve) else curve, dtype=float)
    t = np.arange(len(y), dtype=float) if days is None else np.asarray(days, dtype=float)
    if len(y) < 5:
        raise ValueError("need at least 5 points")
    if np.any(np.diff(y) < -1e-9 * max(1.0, abs(y).max())):
        raise ValueError("cumulative series must be non-decreasing")
    if not y.max() > 0:
        raise NoFitError("series has no positive values")

    span = t[-1] - t[0]
    t_lo, t_hi = t[0] - 0.5 * span, t[-1] + 0.5 * span
    L0, r0, m0 = _initial_guess(t, y)
    p, rss, ok = _gauss_newton(t, y, np.array([np.log(L0), np.log(r0), m0]), tol, max_iter)
    L, r, t0 = float(np.exp(p[0])), float(np.exp(p[1])), float(p[2])
    method = "gauss-newton"
    if not (ok and t_lo <= t0 <= t_hi and np.isfinite(rss)):
        L, r, t0, rss = _grid_fit(t, y, t_lo, t_hi)
        method, ok = "grid", True
    low = method == "grid" or t0 > t[-1]
    return LogisticFit(L, r, t0, float(rss), ok, method, low)


def peak_time(fit: LogisticFit) -> float:
    """Day of maximal fitted daily incidence (the logistic midpoint)."""
    return fit.t0


# --------------------------------------------------------------------------
# lead time

@dataclass(frozen=True)
class LeadTimeResult:
    t_sensor: float
    t_random: float
    lead: float


def lead_time(sensor_curve, random_curve) -> LeadTimeResult:
    """Peak of the random (population proxy) curve minus the sensor peak."""
    ts = peak_time(fit_logistic(sensor_curve))
    tr = peak_time(fit_logistic(random_curve))
    return LeadTimeResult(ts, tr, tr - ts)


@dataclass
class LeadSample:
    """Per-run lead times of one sensor set; ``failures`` counts runs without a usable fit."""

    leads: np.ndarray
    failures: int

    @property
    def mean(self) -> float:
        return float(self.leads.mean()) if self.leads.size else float("nan")

    @property
    def variance(self) -> float:
        return sample_variance(self.leads)


def sample_variance(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(x.var(ddof=1)) if x.size >= 2 else float("nan")


def run_leads(ens: Ensemble, sensors, random_set, min_attack: float = 0.05) -> LeadSample:
    """Lead time of ``sensors`` against ``random_set`` in every run of ``ens``.

    Runs where either set has fewer than ``max(5, min_attack * size)``
    infections (no real outbreak) or where a fit fails are counted as
    failures and left out.  An empty sensor set fails every run.
    """
    sensors = np.asarray(sensors, dtype=np.int64)
    random_set = np.asarray(random_set, dtype=np.int64)
    if sensors.size == 0 or random_set.size == 0:
        return LeadSample(np.zeros(0), len(ens.dendrograms))
    need_s = max(5, min_attack * len(sensors))
    need_r = max(5, min_attack * len(random_set))
    leads, failures = [], 0
    for den in ens.dendrograms:
        cs = restrict_epicurve(den, sensors, ens.horizon).cumulative
        cr = restrict_epicurve(den, random_set, ens.horizon).cumulative
        if cs[-1] < need_s or cr[-1] < need_r:
            failures += 1
            continue
        try:
            leads.append(lead_time(cs, cr).lead)
        except (NoFitError, np.linalg.LinAlgError):
            failures += 1
    return LeadSample(np.array(leads), failures)


# --------------------------------------------------------------------------
# dispersion sweep

@dataclass(frozen=True)
class FanoRow:
    size: float
    k: int
    mean_lead: float
    variance: float
    inverse_fano: float
    n_ok: int
    n_fail: int


def fano_stats(leads) -> tuple[float, float, float]:
    """``(mean, sample variance, mean / variance)``; zero variance gives +inf."""
    leads = np.asarray(leads, dtype=float)
    mean = float(leads.mean())
    var = sample_variance(leads)
    if var == 0:
        inv = float("inf")
    elif np.isnan(var):
        inv = float("nan")
    else:
        inv = mean / var
    return mean, var, inv


def fano_sweep(
    net: ContactNetwork,
    model: DiseaseModel,
    strategy: str,
    sizes: Sequence[float],
    runs: int,
    seeds: int = 5,
    horizon: int = 200,
    rng_seed: int = 0,
    eps0: float = 0.1,
    workers: int = 1,
) -> list[FanoRow]:
    """Mean, variance and inverse Fano factor of the lead time per set size.

    Sensors are chosen on a training ensemble and scored on a separate
    evaluation ensemble; each size is compared to a random set of the same
    size.  ``sizes`` are fractions of the population.
    """
    from .experiments import choose_sensors

    if runs < 2:
        raise ValueError("runs must be >= 2")
    if any(not 0 < s <= 1 for s in sizes):
        raise ValueError("sizes must lie in (0, 1]")
    train = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(rng_seed, "train")), runs, workers)
    evaluate = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(rng_seed, "eval")), runs, workers)
    from .sensors import select_random

    rows = []
    for size in sizes:
        k = max(1, int(round(size * net.n)))
        sensors = choose_sensors(strategy, net, train, k, eps0=eps0, rng_seed=derive_seed(rng_seed, "nominate"))
        rand = select_random(net, k, derive_seed(rng_seed, "random", k))
        sample = run_leads(evaluate, sensors.members, rand.members)
        if sample.leads.size:
            mean, var, inv = fano_stats(sample.leads)
        else:
            mean = var = inv = float("nan")
        rows.append(FanoRow(float(size), k, mean, var, inv, int(sample.leads.size), sample.failures))
    return rows


# --------------------------------------------------------------------------
# observation-window stability

@dataclass
class StabilityResult:
    windows: np.ndarray
    leads: np.ndarray
    low_confidence: np.ndarray
    full_lead: float
    # first window from which every later estimate is within tolerance of full_lead
    w_star: int | None
    tolerance: float


def stability_from_curves(sensor_cum, random_cum, windows: Sequence[int], tolerance: float = 1.0) -> StabilityResult:
    """Lead estimated from days ``0..w`` only, for each window ``w``."""
    windows = np.asarray(windows, dtype=np.int64)
    if np.any(np.diff(windows) <= 0):
        raise ValueError("windows must be strictly ascending")
    sensor_cum = np.asarray(sensor_cum, dtype=float)
    random_cum = np.asarray(random_cum, dtype=float)
    full = lead_time(sensor_cum, random_cum).lead
    leads = np.full(len(windows), np.nan)
    low = np.ones(len(windows), dtype=bool)
    for i, w in enumerate(windows):
        upto = min(int(w), len(sensor_cum) - 1) + 1
        if upto < 5:
            continue
        try:
            fs = fit_logistic(sensor_cum[:upto])
            fr = fit_logistic(random_cum[:upto])
        except NoFitError:
            continue
        leads[i] = fr.t0 - fs.t0
        low[i] = fs.low_confidence or fr.low_confidence
    close = np.abs(leads - full) <= tolerance
    w_star = None
    for i in range(len(windows) - 1, -1, -1):
        if not close[i]:
            break
        w_star = int(windows[i])
    return StabilityResult(windows, leads, low, full, w_star, tolerance)


def stability_curve(
    net: ContactNetwork,
    model: DiseaseModel,
    sensors,
    random_set,
    windows: Sequence[int],
    runs: int,
    seeds: int = 5,
    horizon: int = 200,
    rng_seed: int = 0,
    tolerance: float = 1.0,
    workers: int = 1,
) -> StabilityResult:
    """Window-truncated lead estimates on ensemble-mean curves of both sets."""
    from .epidemic import mean_cumulative

    ens = run_ensemble(net, model, SimulationConfig(seeds, horizon, derive_seed(rng_seed, "eval")), runs, workers)
    cs = mean_cumulative(ens, np.asarray(sensors))
    cr = mean_cumulative(ens, np.asarray(random_set))
    return stability_from_curves(cs, cr, windows, tolerance)


# --------------------------------------------------------------------------
# cubic prediction of the population curve

@dataclass
class PolyPrediction:
    coefficients: np.ndarray  # c0 + c1 x + c2 x^2 + c3 x^3
    train_days: int
    predicted: np.ndarray  # for days train_days .. end
    actual: np.ndarray
    rmse: float

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coefficients)


def fit_poly_predictor(sensor_cum, random_cum, train_days: int, degree: int = 3) -> PolyPrediction:
    """Least-squares cubic from sensor cumulative to random-set cumulative.

    Fitted on the first ``train_days`` days; predictions and RMSE cover the
    remaining days.
    """
    x = np.asarray(sensor_cum, dtype=float)
    y = np.asarray(random_cum, dtype=float)
    if len(x) != len(y):
        raise ValueError("series differ in length")
    if not 0 < train_days < len(x):
        raise ValueError("train_days must lie in (0, len(series))")
    xt, yt = x[:train_days], y[:train_days]
    scale = max(np.abs(xt).max(), 1e-300)
    design = np.vander(xt / scale, degree + 1, increasing=True)
    if np.unique(xt).size <= degree or np.linalg.matrix_rank(design) <= degree:
        raise ValueError("rank-deficient design: predictor needs more distinct values")
    coef, *_ = np.linalg.lstsq(design, yt, rcond=None)
    coef = coef / scale ** np.arange(degree + 1)
    pred = np.polynomial.polynomial.polyval(x[train_days:], coef)
    actual = y[train_days:]
    rmse = float(np.sqrt(np.mean((pred - actual) ** 2)))
    return PolyPrediction(coef, train_days, pred, actual, rmse)
