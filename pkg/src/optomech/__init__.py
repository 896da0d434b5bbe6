"""Simulator and feasibility calculator for postselected optomechanical
superpositions created and probed with nested interferometry."""

__version__ = "0.1.0"

from .arrival import (
    ArrivalHistogram,
    CavityParams,
    arrival_density,
    bin_arrivals,
    postselect_prob_approx,
    residence_density,
    total_success_probability,
)
from .devices import (
    DelayLineSpec,
    DerivedDevice,
    DeviceParams,
    decoherence_catalog,
    delay_line_survival,
    derive,
    eid_time,
    feasibility_report,
    load_bundled_devices,
    load_devices,
)
from .interferometer import (
    DecoherenceSpec,
    FringeOutcome,
    JointState,
    OpticalMode,
    apply_decoherence,
    dark_port_postselect,
    final_fringe,
    state_after_interaction,
    sweep_visibility,
    timebin_state_after_early_pass,
)
from .montecarlo import (
    ExperimentConfig,
    RunSummary,
    TrialRecord,
    arrival_oscillation_check,
    data_collection_estimate,
    estimate_visibility,
    simulate_run,
)
from .quantum import (
    CoherentLabel,
    CouplingParams,
    FockVector,
    coherent_overlap,
    displacement_at,
    evolve_fock_oracle,
    fidelity,
    fock_expand,
    kerr_phase_at,
)

__all__ = [
    "ArrivalHistogram",
    "CavityParams",
    "CoherentLabel",
    "CouplingParams",
    "DecoherenceSpec",
    "DelayLineSpec",
    "DerivedDevice",
    "DeviceParams",
    "ExperimentConfig",
    "FockVector",
    "FringeOutcome",
    "JointState",
    "OpticalMode",
    "RunSummary",
    "TrialRecord",
    "apply_decoherence",
    "arrival_density",
    "arrival_oscillation_check",
    "bin_arrivals",
    "coherent_overlap",
    "dark_port_postselect",
    "data_collection_estimate",
    "decoherence_catalog",
    "delay_line_survival",
    "derive",
    "displacement_at",
    "eid_time",
    "estimate_visibility",
    "evolve_fock_oracle",
    "feasibility_report",
    "fidelity",
    "final_fringe",
    "fock_expand",
    "kerr_phase_at",
    "load_bundled_devices",
    "load_devices",
    "postselect_prob_approx",
    "residence_density",
    "simulate_run",
    "state_after_interaction",
    "sweep_visibility",
    "timebin_state_after_early_pass",
    "total_success_probability",
]
