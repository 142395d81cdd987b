"""Epoch-based simulator for allocating multi-skill jobs to a stochastic crowd of agents."""
from .admission import AdmissionConfig, compute_beta, static_benchmark_beta
from .capacity import (CategorySplit, RegionVerdict, boundary_factor, cac_check, inflexible_outer_check,
                       outer_region_check, region_check)
from .central import AllocationPlan, PolicyError, QueueState, maxweight_solve, task_allocation
from .engine import POLICIES, InvariantViolation, SimRun, make_policy, run, stability_diagnostic, sweep
from .instances import INSTANCES, generate
from .knapsack import KnapsackInstance, lp_relax_and_floor, multidim_knapsack_exact, unbounded_knapsack
from .model import (AgentTypeSpec, AvailabilityBlock, FeasibilityGraph, JobTypeSpec, PolicyConfig, Scenario,
                    ScenarioError, SystemClass, load_scenario, save_scenario, validate_scenario)
from .stochastic import DistributionSpec, epoch_rng, mean_of, sample_arrivals, sample_availability

__version__ = "0.1.0"
