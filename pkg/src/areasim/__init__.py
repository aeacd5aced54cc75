"""Virtual-rank simulation of round-robin vs. area-to-rank spiking network distribution."""

from .engine import CausalityError, CostParams, RunOptions, RunResult, run, synthetic_cycle_time
from .model import BenchmarkParams, DelayDist, NetworkSpec, TimeGrid, generate_benchmark, generate_heterogeneous
from .partition import CONVENTIONAL, STRUCTURE_AWARE, PartitionPlan, make_plan, plan_round_robin, plan_structure_aware
from .tables import build_tables

__version__ = "0.1.0"
