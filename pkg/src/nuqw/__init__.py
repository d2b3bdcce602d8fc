"""Lossy split-step quantum walks: real-space evolution, winding numbers and experiment scenarios."""
from ._backend import BACKEND
from .core import MINUS, PLUS, CoinSpec, Frame, WalkerState, floquet_step, wrap_angle
from .engine import (
    DetectionRecord,
    DisorderSpec,
    FixedSteps,
    Observables,
    SurvivalBelow,
    average_displacement,
    dwell_time,
    evolve,
    lattice_half_width,
    monte_carlo_oracle,
    run_walk,
    sample_disorder,
    survivor_distribution,
)
from .errors import (
    BoundaryOverflow,
    ConfigError,
    DegenerateBand,
    EmptyDistribution,
    MalformedTable,
    WalkError,
    ZeroNorm,
)
from .experiments import (
    CountTable,
    RegionLayout,
    disorder_displacement,
    disorder_edge,
    displacement_scan,
    edge_experiment,
    ingest_counts,
    read_counts_csv,
    similarity,
    sweep_theta1,
)
from .field import CoinField
from .topology import bloch_floquet, decompose, invariant_pair, phase_diagram, quasienergy_bands, winding_number

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BoundaryOverflow",
    "CoinField",
    "CoinSpec",
    "ConfigError",
    "CountTable",
    "DegenerateBand",
    "DetectionRecord",
    "DisorderSpec",
    "EmptyDistribution",
    "FixedSteps",
    "Frame",
    "MINUS",
    "MalformedTable",
    "Observables",
    "PLUS",
    "RegionLayout",
    "SurvivalBelow",
    "WalkError",
    "WalkerState",
    "ZeroNorm",
    "average_displacement",
    "bloch_floquet",
    "decompose",
    "disorder_displacement",
    "disorder_edge",
    "displacement_scan",
    "dwell_time",
    "edge_experiment",
    "evolve",
    "floquet_step",
    "ingest_counts",
    "invariant_pair",
    "lattice_half_width",
    "monte_carlo_oracle",
    "phase_diagram",
    "quasienergy_bands",
    "read_counts_csv",
    "run_walk",
    "sample_disorder",
    "similarity",
    "survivor_distribution",
    "sweep_theta1",
    "winding_number",
    "wrap_angle",
]
