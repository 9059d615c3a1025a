"""Simulator, kernel scheduler and performance model for a message-programmed
reconfigurable fabric."""

from .fabric import Fabric, FabricConfig, SimulationError, route_decision
from .isa import MessageWord, Op, apply_instruction, decode, encode
from .pagerank import (Graph, PageRankParams, build_transition, fabric_pagerank,
                       load_graph, reference_pagerank)
from .perf import CostParams, matvec_latency, pagerank_timesteps, tiled_runtime_seconds
from .schedule import InjectionSchedule
from .scheduler import (build_matvec, build_pagerank_iteration, build_tiled_matvec,
                        walkthrough_schedule)

__version__ = "0.1.0"
