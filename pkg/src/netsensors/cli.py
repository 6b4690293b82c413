"""``netsensors`` command line.

Every subcommand accepts the shared experiment flags.  ``--config FILE``
reads ``key = value`` lines whose keys are flag names (``rng-seed`` or
``rng_seed``); flags given on the command line override the file.

Exit status: 0 on success, 2 on a usage or parameter error, 1 when the
experiment itself fails.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import experiments as ex
from .epicurve import fano_sweep, fit_poly_predictor, stability_curve
from .epidemic import DiseaseModel, SimulationConfig, mean_cumulative, run_ensemble
from .graph import (
    ContactNetwork,
    NetworkFormatError,
    degree_stats,
    generate_citylike,
    generate_starlike,
    load_network,
    network_to_text,
)
from .rng import derive_seed
from .sensors import select_random
from .surrogate import SurrogateCriteria, apply_criteria, compare_information_tiers, extract_features, refine_surrogates

DEFAULTS = {
    "network": None,
    "network_format": "attributed",
    "generator": "citylike",
    "n": 20000,
    "hub_fraction": 0.01,
    "avg_degree": 20.0,
    "model": "SEIR",
    "beta": 4.2e-5,
    "alpha": 0.5,
    "gamma": 0.25,
    "k": 0.05,
    "eps": 0.8,
    "eps0": 0.1,
    "runs": 200,
    "horizon": 200,
    "rng_seed": 0,
    "out": None,
    "workers": 1,
    "sample_size": None,
    "nominations": 3,
}
COMMAND_DEFAULTS = {
    "generate": {},
    "leadtime": {"strategy": "TopK,WD,TT,DT", "seeds": "1,5,10"},
    "fano": {"strategy": "DT", "seeds": "5", "sizes": "0.01,0.02,0.05,0.1,0.2"},
    "stability": {"strategy": "DT", "seeds": "5", "windows": None, "tolerance": 1.0},
    "predict": {"strategy": "DT", "seeds": "5", "train_days": None},
    "surrogate": {"strategy": "DT", "seeds": "5", "rates": "3.0e-5,4.2e-5,5.5e-5", "train_frac": 0.02,
                  "criteria": None},
}


class UsageError(Exception):
    """Bad flag values; reported with exit status 2."""


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(x) for x in str(text).split(",") if x.strip()]
        except ValueError as err:
            raise argparse.ArgumentTypeError(str(err)) from None
    return parse


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("network")
    g.add_argument("--config", metavar="FILE", help="key = value file with defaults for any flag below")
    g.add_argument("--network", metavar="PATH", help="contact network file (overrides --generator)")
    g.add_argument("--network-format", choices=["attributed", "edge-list"],
                   help="format of --network (default attributed)")
    g.add_argument("--generator", help="synthetic network: starlike or citylike; comma list allowed for "
                                       "leadtime (default citylike)")
    g.add_argument("--n", type=int, help="nodes for --generator (default 20000)")
    g.add_argument("--hub-fraction", type=float, help="starlike hub share of nodes (default 0.01)")
    g.add_argument("--avg-degree", type=float, help="citylike target average degree (default 20)")
    g = p.add_argument_group("disease")
    g.add_argument("--model", help="SI or SEIR (default SEIR)")
    g.add_argument("--beta", type=float, help="transmission rate per second of contact (default 4.2e-5)")
    g.add_argument("--alpha", type=float, help="daily exposed-to-infectious rate (default 0.5)")
    g.add_argument("--gamma", type=float, help="daily recovery rate (default 0.25)")
    g = p.add_argument_group("sensors")
    g.add_argument("--strategy", help="TopK, WD, TT, DT, MAIT or random; comma list for leadtime")
    g.add_argument("--k", type=float, help="sensor set size; below 1 means a population fraction (default 0.05)")
    g.add_argument("--eps", type=float, help="coverage target for MAIT (default 0.8)")
    g.add_argument("--eps0", type=float, help="minimum infection rate for TT/DT candidates (default 0.1)")
    g.add_argument("--sample-size", type=int, help="respondents per batch for TopK/WD (default k)")
    g.add_argument("--nominations", type=int, help="neighbours nominated per respondent for TopK/WD (default 3)")
    g = p.add_argument_group("experiment")
    g.add_argument("--runs", type=int, help="simulations per ensemble (default 200)")
    g.add_argument("--seeds", help="initial infections; comma list for leadtime (default 1,5,10; others 5)")
    g.add_argument("--horizon", type=int, help="simulated days (default 200)")
    g.add_argument("--rng-seed", type=int, help="master seed for every random stage (default 0)")
    g.add_argument("--workers", type=int, help="processes for ensemble runs (default 1)")
    g.add_argument("--out", metavar="DIR", help="output directory (default: main CSV to stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsensors", description="Network sensor selection experiments.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    helps = {
        "generate": "write a synthetic contact network and print its degree statistics",
        "leadtime": "lead time of each strategy against a random set, per seed count",
        "fano": "lead mean, variance and inverse Fano factor across sensor set sizes",
        "stability": "lead estimated from truncated observation windows",
        "predict": "cubic prediction of the random-set curve from the sensor curve",
        "surrogate": "feature-based sensors and information-tier comparison",
    }
    subs = {}
    for name, text in helps.items():
        subs[name] = p = sub.add_parser(name, help=text, description=text)
        _add_common(p)
    subs["fano"].add_argument("--sizes", help="set sizes as population fractions (default 0.01,0.02,0.05,0.1,0.2)")
    subs["stability"].add_argument("--windows", help="observation windows in days (default 20,30,...,horizon)")
    subs["stability"].add_argument("--tolerance", type=float, help="allowed gap to the full-window lead (default 1)")
    subs["predict"].add_argument("--train-days", type=int, help="days used to fit the cubic (default half the horizon)")
    subs["surrogate"].add_argument("--rates", help="transmission rates for refinement (default 3.0e-5,4.2e-5,5.5e-5)")
    subs["surrogate"].add_argument("--train-frac", type=float,
                                   help="population share labelled positive per rate (default 0.02)")
    subs["surrogate"].add_argument("--criteria", metavar="FILE", help="selection criteria key = value file")
    return parser


def _config_argv(path: str) -> list[str]:
    argv = []
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read config {path}: {err}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key = key.strip().replace("_", "-")
        if key == "config":
            raise UsageError(f"{path}:{lineno}: nested config files are not supported")
        argv.append(f"--{key}={val.strip()}")
    return argv


def parse_config(argv: list[str]) -> dict:
    """Parsed flags merged over config-file values and defaults."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        args = parser.parse_args([args.command] + _config_argv(args.config) + argv[1:])
    cfg = dict(DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[args.command])
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    return cfg


# --------------------------------------------------------------------------
# resolution of shared settings

def _parse_list(cfg, key, kind):
    try:
        return _csv_list(kind)(cfg[key])
    except argparse.ArgumentTypeError as err:
        raise UsageError(f"--{key.replace('_', '-')}: {err}") from None


def _networks(cfg) -> list[tuple[str, ContactNetwork]]:
    if cfg["network"]:
        try:
            return [(Path(cfg["network"]).stem, load_network(cfg["network"], cfg["network_format"]))]
        except OSError as err:
            raise RuntimeError(f"cannot read network: {err}") from None
    names = _parse_list(cfg, "generator", str)
    if not names:
        raise UsageError("--generator needs a name")
    if cfg["n"] < 2:
        raise UsageError("--n must be >= 2")
    out = []
    for name in names:
        if name not in ("starlike", "citylike"):
            raise UsageError(f"unknown generator {name!r}; expected starlike or citylike")
        try:
            if name == "starlike":
                out.append((name, generate_starlike(cfg["n"], cfg["hub_fraction"], seed=cfg["rng_seed"])))
            else:
                out.append((name, generate_citylike(cfg["n"], cfg["avg_degree"], seed=cfg["rng_seed"])))
        except ValueError as err:
            raise UsageError(f"{name}: {err}") from None
    return out


def _k(cfg, n) -> int:
    try:
        return ex.resolve_k(cfg["k"], n)
    except ValueError as err:
        raise UsageError(f"--k: {err}") from None


def _model(cfg) -> DiseaseModel:
    return DiseaseModel(cfg["model"], cfg["beta"], cfg["alpha"], cfg["gamma"])


def _check_counts(cfg):
    if cfg["runs"] < 1:
        raise UsageError("--runs must be >= 1")
    if cfg["horizon"] < 1:
        raise UsageError("--horizon must be >= 1")
    if cfg["workers"] < 1:
        raise UsageError("--workers must be >= 1")


def _strategies(cfg) -> list[str]:
    names = _parse_list(cfg, "strategy", str)
    canon = {s.lower(): s for s in ex.STRATEGIES}
    bad = [s for s in names if s.lower() not in canon]
    if bad or not names:
        raise UsageError(f"unknown strategy {', '.join(bad) or '(none)'}; expected one of {', '.join(ex.STRATEGIES)}")
    return [canon[s.lower()] for s in names]


def _single(values, flag):
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value for this command")
    return values[0]


class OutputWriter:
    """Single sink for command output: files under ``out`` or stdout."""

    def __init__(self, out: str | None, stdout=None):
        self.dir = Path(out) if out else None
        self.stdout = stdout or sys.stdout
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str, main: bool = True):
        if self.dir is None:
            if main:
                self.stdout.write(text)
            return
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, self.dir / name)

    def note(self, text: str):
        print(text, file=sys.stderr if self.dir is None else self.stdout)


# --------------------------------------------------------------------------
# subcommands

def cmd_generate(cfg, out: OutputWriter):
    if cfg["network"]:
        raise UsageError("generate takes --generator, not --network")
    (name, net), *rest = _networks(cfg)
    if rest:
        raise UsageError("generate takes a single --generator")
    out.write("network.txt", network_to_text(net))
    s = degree_stats(net)
    out.note(f"{name}: n={s.n} m={net.m} avg_degree={s.avg_degree:.4f} max_degree={s.max_degree}")


def _sensor_kwargs(cfg, seeds_label):
    return dict(eps0=cfg["eps0"], eps=cfg["eps"], K=cfg["nominations"], sample_size=cfg["sample_size"],
                rng_seed=derive_seed(cfg["rng_seed"], "nominate", seeds_label))


def cmd_leadtime(cfg, out: OutputWriter):
    _check_counts(cfg)
    strategies = _strategies(cfg)
    seed_counts = _parse_list(cfg, "seeds", int)
    if not seed_counts or min(seed_counts) < 1:
        raise UsageError("--seeds must be positive integers")
    model = _model(cfg)
    rows = []
    for name, net in _networks(cfg):
        _k(cfg, net.n)
        if max(seed_counts) > net.n:
            raise UsageError("--seeds exceeds the population")
        rows += ex.leadtime_experiment(net, model, seed_counts, cfg["runs"], cfg["k"], cfg["horizon"],
                                       cfg["rng_seed"], strategies, cfg["eps0"], cfg["eps"], cfg["nominations"],
                                       cfg["sample_size"], name, cfg["workers"])
    out.write("leadtime.csv", ex.dataclass_csv(rows))
    out.write("strategy_table.csv", ex.strategy_table_csv(rows, strategies), main=False)


def _one_network(cfg):
    nets = _networks(cfg)
    if len(nets) != 1:
        raise UsageError("this command takes a single network")
    return nets[0]


def _one_seed_count(cfg, n):
    seeds = _single(_parse_list(cfg, "seeds", int), "--seeds")
    if not 1 <= seeds <= n:
        raise UsageError(f"--seeds must lie in [1, {n}]")
    return seeds


def cmd_fano(cfg, out: OutputWriter):
    _check_counts(cfg)
    if cfg["runs"] < 2:
        raise UsageError("--runs must be >= 2 for a variance")
    strategy = _single(_strategies(cfg), "--strategy")
    sizes = _parse_list(cfg, "sizes", float)
    if not sizes or any(not 0 < s <= 1 for s in sizes):
        raise UsageError("--sizes must be fractions in (0, 1]")
    name, net = _one_network(cfg)
    seeds = _one_seed_count(cfg, net.n)
    rows = fano_sweep(net, _model(cfg), strategy, sizes, cfg["runs"], seeds, cfg["horizon"], cfg["rng_seed"],
                      cfg["eps0"], cfg["workers"])
    header = ["network", "strategy", "size", "k", "mean_lead", "variance", "inverse_fano", "n_ok", "n_fail"]
    body = [[name, strategy, r.size, r.k, r.mean_lead, r.variance, r.inverse_fano, r.n_ok, r.n_fail] for r in rows]
    out.write("fano.csv", ex.to_csv(header, body))


def _sensors_and_random(cfg, net, model, seeds):
    """Sensors chosen on a training ensemble plus the matching random set."""
    strategy = _single(_strategies(cfg), "--strategy")
    k = _k(cfg, net.n)
    train = run_ensemble(net, model, SimulationConfig(seeds, cfg["horizon"], derive_seed(cfg["rng_seed"], "train")),
                         cfg["runs"], cfg["workers"])
    sensors = ex.choose_sensors(strategy, net, train, k, **_sensor_kwargs(cfg, seeds))
    rand = select_random(net, k, derive_seed(cfg["rng_seed"], "random-set"))
    return strategy, sensors, rand


def cmd_stability(cfg, out: OutputWriter):
    _check_counts(cfg)
    name, net = _one_network(cfg)
    seeds = _one_seed_count(cfg, net.n)
    windows = (_parse_list(cfg, "windows", int) if cfg["windows"] is not None
               else list(range(20, cfg["horizon"] + 1, 10)))
    if not windows or any(np.diff(windows) <= 0) or min(windows) < 1:
        raise UsageError("--windows must be strictly ascending positive days")
    model = _model(cfg)
    strategy, sensors, rand = _sensors_and_random(cfg, net, model, seeds)
    res = stability_curve(net, model, sensors.members, rand.members, windows, cfg["runs"], seeds, cfg["horizon"],
                          cfg["rng_seed"], cfg["tolerance"], cfg["workers"])
    header = ["network", "strategy", "window", "lead", "abs_diff", "low_confidence", "full_lead", "w_star"]
    body = [[name, strategy, int(w), lead, abs(lead - res.full_lead), bool(low), res.full_lead, res.w_star]
            for w, lead, low in zip(res.windows, res.leads, res.low_confidence)]
    out.write("stability.csv", ex.to_csv(header, body))


def cmd_predict(cfg, out: OutputWriter):
    _check_counts(cfg)
    name, net = _one_network(cfg)
    seeds = _one_seed_count(cfg, net.n)
    if cfg["train_days"] is None:
        cfg["train_days"] = cfg["horizon"] // 2
    if not 0 < cfg["train_days"] < cfg["horizon"] + 1:
        raise UsageError("--train-days must lie in [1, horizon]")
    model = _model(cfg)
    strategy, sensors, rand = _sensors_and_random(cfg, net, model, seeds)
    ens = run_ensemble(net, model, SimulationConfig(seeds, cfg["horizon"], derive_seed(cfg["rng_seed"], "eval")),
                       cfg["runs"], cfg["workers"])
    cs = mean_cumulative(ens, sensors.members)
    cr = mean_cumulative(ens, rand.members)
    fit = fit_poly_predictor(cs, cr, cfg["train_days"])
    predicted = fit(cs)
    header = ["day", "sensor_cumulative", "random_cumulative", "predicted", "phase"]
    body = [[d, cs[d], cr[d], predicted[d], "train" if d < cfg["train_days"] else "test"] for d in range(len(cs))]
    out.write("predict.csv", ex.to_csv(header, body))
    summary = ["network", "strategy", "train_days", "c0", "c1", "c2", "c3", "rmse", "random_final", "rmse_fraction"]
    final = cr[-1]
    row = [name, strategy, cfg["train_days"], *fit.coefficients, fit.rmse, final,
           fit.rmse / final if final > 0 else float("nan")]
    out.write("predict_summary.csv", ex.to_csv(summary, [row]), main=False)


def cmd_surrogate(cfg, out: OutputWriter):
    _check_counts(cfg)
    name, net = _one_network(cfg)
    seeds = _one_seed_count(cfg, net.n)
    strategy = _single(_strategies(cfg), "--strategy")
    if strategy not in ("TT", "DT"):
        raise UsageError("surrogate training labels need --strategy TT or DT")
    rates = _parse_list(cfg, "rates", float)
    if not rates or min(rates) <= 0:
        raise UsageError("--rates must be positive")
    if not 0 < cfg["train_frac"] <= 0.5:
        raise UsageError("--train-frac must lie in (0, 0.5]")
    if cfg["criteria"]:
        try:
            criteria = SurrogateCriteria.loads(Path(cfg["criteria"]).read_text())
        except OSError as err:
            raise UsageError(f"cannot read criteria: {err}") from None
    else:
        criteria = SurrogateCriteria()
    k = _k(cfg, net.n)
    model = _model(cfg)
    features = extract_features(net)
    candidates = apply_criteria(features, criteria)
    refined = refine_surrogates(net, candidates, rates, model, strategy, cfg["train_frac"], cfg["rng_seed"],
                                cfg["runs"], seeds, cfg["horizon"], cfg["eps0"], features=features,
                                workers=cfg["workers"])
    rows = compare_information_tiers(net, model, k, cfg["runs"], strategy, seeds, cfg["horizon"], cfg["rng_seed"],
                                     cfg["train_frac"], cfg["eps0"],
                                     extra_sets={"criteria": candidates, "refined": refined.members},
                                     workers=cfg["workers"])
    header = ["network", "set", "size", "mean_lead", "var_lead", "n_ok", "n_fail"]
    body = [[name, r.tier, r.size, r.mean_lead, r.var_lead, r.n_ok, r.n_fail] for r in rows]
    out.write("surrogate.csv", ex.to_csv(header, body))
    per_rate = ex.to_csv(["rate", "predicted_positive", "candidates"],
                         [[rate, count, refined.candidates] for rate, count in refined.per_rate])
    out.write("surrogate_rates.csv", per_rate, main=False)
    out.write("surrogate_members.txt", "".join(f"{v}\n" for v in refined.members.tolist()), main=False)
    out.note(f"refined surrogate set: {len(refined.members)} of {refined.candidates} candidates ({refined.status})")


COMMANDS = {
    "generate": cmd_generate,
    "leadtime": cmd_leadtime,
    "fano": cmd_fano,
    "stability": cmd_stability,
    "predict": cmd_predict,
    "surrogate": cmd_surrogate,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse: --help exits 0, bad flags exit 2
        return int(exc.code or 0)
    except UsageError as err:
        print(f"netsensors: error: {err}", file=sys.stderr)
        return 2
    try:
        out = OutputWriter(cfg["out"])
        try:
            _model(cfg)
        except ValueError as err:
            raise UsageError(str(err)) from None
        COMMANDS[cfg["command"]](cfg, out)
    except UsageError as err:
        print(f"netsensors {cfg['command']}: error: {err}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError, NetworkFormatError) as err:
        print(f"netsensors {cfg['command']}: failed: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
