"""Sensor selection for early detection of outbreaks on contact networks."""

from .domtree import Digraph, DominatorTree, build_dominator_tree
from .epicurve import fit_logistic, lead_time, run_leads
from .epidemic import DiseaseModel, Ensemble, SimulationConfig, run_ensemble, simulate
from .graph import ContactNetwork, degree_stats, generate_citylike, generate_starlike, load_network, save_network
from .sensors import (
    SensorSet,
    estimate_coverage,
    select_dt,
    select_greedy_mait,
    select_random,
    select_topk_degree,
    select_tt,
    select_weighted_degree,
)

__version__ = "0.1.0"

__all__ = [
    "ContactNetwork",
    "Digraph",
    "DiseaseModel",
    "DominatorTree",
    "Ensemble",
    "SensorSet",
    "SimulationConfig",
    "build_dominator_tree",
    "degree_stats",
    "estimate_coverage",
    "fit_logistic",
    "generate_citylike",
    "generate_starlike",
    "lead_time",
    "load_network",
    "run_ensemble",
    "run_leads",
    "save_network",
    "select_dt",
    "select_greedy_mait",
    "select_random",
    "select_topk_degree",
    "select_tt",
    "select_weighted_degree",
    "simulate",
]
