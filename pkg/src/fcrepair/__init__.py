"""Repair free-choice workflow nets using regions of an event log's transition system."""

from .conformance import ConformanceSummary, entropy, precision, replay_fitness
from .estimators import FreeChoiceRepair, RegionSynthesizer
from .event_log import EventLog, filter_top_k, parse_traces_text, parse_xes, read_log
from .exceptions import (
    BudgetExhausted,
    FcRepairError,
    ParseError,
    PreconditionError,
    ResourceError,
    StateExplosionError,
    UnboundedNetError,
)
from .petri_net import Marking, NetSystem, PetriNet, check_soundness, reachability_graph
from .pnml import parse_pnml, read_pnml, serialize_pnml, write_pnml
from .regions import EsspProblem, Region, minimal_regions, solve_essp, synthesize
from .repair import RepairReport, find_false_free_choice, repair
from .transition_system import TransitionSystem, build_prefix_tree, minimize

__version__ = "0.1.0"

__all__ = [
    "ConformanceSummary",
    "entropy",
    "precision",
    "replay_fitness",
    "FreeChoiceRepair",
    "RegionSynthesizer",
    "EventLog",
    "filter_top_k",
    "parse_traces_text",
    "parse_xes",
    "read_log",
    "BudgetExhausted",
    "FcRepairError",
    "ParseError",
    "PreconditionError",
    "ResourceError",
    "StateExplosionError",
    "UnboundedNetError",
    "Marking",
    "NetSystem",
    "PetriNet",
    "check_soundness",
    "reachability_graph",
    "parse_pnml",
    "read_pnml",
    "serialize_pnml",
    "write_pnml",
    "EsspProblem",
    "Region",
    "minimal_regions",
    "solve_essp",
    "synthesize",
    "RepairReport",
    "find_false_free_choice",
    "repair",
    "TransitionSystem",
    "build_prefix_tree",
    "minimize",
]
