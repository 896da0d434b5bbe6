"""Stochastic laboratory: seeded end-to-end runs of the detection protocol.

Each injected photon is simulated from exact per-trial distributions:
residence time from Exp(gamma_c), postselection from the exact dark-port
probability, delay-line survival, detector choice from the interference
fringe with the storage coherence factor, plus detector jitter and Poisson
dark counts inside the detection window.

Randomness is counter-based: trials are processed in fixed-size chunks and
chunk ``c`` draws from ``Philox(key=(seed, c))``, so results are identical
for any worker count and any execution order.  Aggregation sorts by trial
index.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .arrival import ArrivalHistogram, bin_arrivals, default_bin_width
from .devices import DelayLineSpec, DeviceParams, derive, delay_line_survival
from .interferometer import DecoherenceSpec, final_fringe
from .quantum import CouplingParams

# Trials per RNG chunk; fixed so that chunk boundaries (and therefore all
# drawn numbers) never depend on the worker count.
CHUNK_SIZE = 1 << 16

MAX_SEED = 2**64 - 1


class ConfigurationError(ValueError):
    """An ExperimentConfig violates one of its invariants."""


class EstimationError(RuntimeError):
    """An estimator was given data it cannot work with."""


class Detector(Enum):
    D1 = "D1"
    D2 = "D2"


class Origin(Enum):
    SIGNAL = "signal"
    DARK = "dark"


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one simulated data-taking run."""

    device: DeviceParams
    decoherence: DecoherenceSpec
    tau_d: float  # storage delay, seconds
    delay_line: DelayLineSpec
    phase_settings: tuple[float, ...]
    injection_rate: float  # photons/s at the input
    n_photons: int
    seed: int
    dark_rate: float = 0.0  # detector dark counts, 1/s
    detector_jitter: float = 1e-7  # TES-scale timing resolution, seconds
    detector_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.n_photons < 1:
            raise ConfigurationError("n_photons must be >= 1")
        if not self.phase_settings:
            raise ConfigurationError("phase_settings must be non-empty")
        if self.tau_d < 0:
            raise ConfigurationError("tau_d must be >= 0")
        if self.dark_rate < 0:
            raise ConfigurationError("dark_rate must be >= 0")
        if self.detector_jitter < 0:
            raise ConfigurationError("detector_jitter must be >= 0")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ConfigurationError("detector_efficiency must be in (0, 1]")
        if not 0 <= self.seed <= MAX_SEED:
            raise ConfigurationError("seed must fit in 64 bits")
        derived = derive(self.device)
        if derived.kappa >= 0.5:
            raise ConfigurationError(
                f"device kappa = {derived.kappa:.3g} is outside the "
                "weak-coupling regime (requires kappa < 0.5)"
            )
        if not 0 < self.injection_rate <= derived.gamma_c / 10.0:
            raise ConfigurationError(
                f"injection_rate must be in (0, gamma_c/10 = "
                f"{derived.gamma_c / 10.0:.4g}] to keep one photon at a time "
                "in the apparatus"
            )


@dataclass(frozen=True)
class TrialRecord:
    """One detector click: arrival convention t = tau_d + t_c (+ jitter)."""

    trial_index: int
    arrival_time: float
    detector: Detector
    phase: float
    origin: Origin


@dataclass(frozen=True)
class VisibilityEstimate:
    visibility: float
    standard_error: float
    phase_offset: float


@dataclass(frozen=True)
class RunSummary:
    histograms: dict[float, ArrivalHistogram]  # keyed by phase setting
    success_count: int
    visibility_estimate: VisibilityEstimate | None
    wall_events: int  # photons that produced no recorded click


def _p_success_exact(params: CouplingParams, t_c: np.ndarray) -> np.ndarray:
    """Vectorized exact dark-port probability (see dark_port_postselect)."""
    theta = params.omega_m * t_c
    alpha_sq = params.kappa**2 * np.abs(1.0 - np.exp(-1j * theta)) ** 2
    phi = params.kappa**2 * (theta - np.sin(theta))
    return 0.5 * (1.0 - np.exp(-0.5 * alpha_sq) * np.cos(phi))


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    key = np.array([seed, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _simulate_chunk(
    config: ExperimentConfig,
    derived_coupling: CouplingParams,
    gamma_c: float,
    survival: float,
    coherence: float,
    loss: float,
    chunk_index: int,
    start: int,
    stop: int,
) -> list[TrialRecord]:
    rng = _chunk_rng(config.seed, chunk_index)
    n = stop - start
    # fixed draw order; every stream position depends only on (seed, chunk)
    t_c = rng.exponential(1.0 / gamma_c, n)
    u_select = rng.random(n)
    u_survive = rng.random(n)
    u_detector = rng.random(n)
    jitter = rng.normal(0.0, 1.0, n)  # scaled below; drawn even if jitter=0
    n_dark = rng.poisson(config.dark_rate / gamma_c, n)
    total_dark = int(n_dark.sum())
    u_dark_time = rng.random(total_dark)
    u_dark_detector = rng.random(total_dark)

    phases = np.asarray(config.phase_settings)
    phase_idx = (start + np.arange(n)) % len(phases)
    success = u_select < _p_success_exact(derived_coupling, t_c)
    detected = success & (u_survive < survival * config.detector_efficiency)

    # events are rare; only trials that produced a click need Python-level work
    dark_offsets = np.concatenate([[0], np.cumsum(n_dark)])
    interesting = np.nonzero(detected | (n_dark > 0))[0]

    records: list[TrialRecord] = []
    detection_window = 1.0 / gamma_c
    for i in interesting:
        trial = start + int(i)
        phase = float(phases[phase_idx[i]])
        if detected[i]:
            fringe = final_fringe(
                derived_coupling, float(t_c[i]), phase, coherence, loss, loss
            )
            total = fringe.p_d1 + fringe.p_d2
            p_d1 = fringe.p_d1 / total if total > 0 else 0.5
            detector = Detector.D1 if u_detector[i] < p_d1 else Detector.D2
            arrival = config.tau_d + float(t_c[i])
            arrival += config.detector_jitter * float(jitter[i])
            records.append(
                TrialRecord(
                    trial_index=trial,
                    arrival_time=max(arrival, config.tau_d),
                    detector=detector,
                    phase=phase,
                    origin=Origin.SIGNAL,
                )
            )
        for k in range(int(dark_offsets[i]), int(dark_offsets[i + 1])):
            records.append(
                TrialRecord(
                    trial_index=trial,
                    arrival_time=config.tau_d
                    + detection_window * float(u_dark_time[k]),
                    detector=(
                        Detector.D1 if u_dark_detector[k] < 0.5 else Detector.D2
                    ),
                    phase=phase,
                    origin=Origin.DARK,
                )
            )
    return records


def simulate_run(
    config: ExperimentConfig, n_workers: int = 1, bins_per_period: int = 20
) -> tuple[RunSummary, list[TrialRecord]]:
    """Run the full protocol for config.n_photons injected photons.

    ``n_workers`` only distributes chunks over threads; the record list is
    identical for every worker count.  ``bins_per_period`` sets the summary
    histogram resolution.
    """
    if bins_per_period < 1:
        raise ConfigurationError("bins_per_period must be >= 1")
    derived = derive(config.device)
    coupling = derived.coupling
    _, survival = delay_line_survival(config.delay_line, config.tau_d)
    loss = 1.0 - survival
    coherence = config.decoherence.coherence_at(config.tau_d)

    n = config.n_photons
    chunks = [
        (c, start, min(start + CHUNK_SIZE, n))
        for c, start in enumerate(range(0, n, CHUNK_SIZE))
    ]

    def work(chunk):
        c, start, stop = chunk
        return _simulate_chunk(
            config, coupling, derived.gamma_c, survival, coherence, loss,
            c, start, stop,
        )

    if n_workers <= 1:
        parts = [work(chunk) for chunk in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(work, chunks))

    records = [r for part in parts for r in part]
    records.sort(key=lambda r: (r.trial_index, r.origin is Origin.DARK, r.arrival_time))

    success_count = sum(1 for r in records if r.origin is Origin.SIGNAL)
    histograms = _per_phase_histograms(
        records, config, derived.omega_m, bins_per_period
    )
    try:
        estimate = estimate_visibility(records, config.phase_settings)
    except EstimationError:
        estimate = None
    summary = RunSummary(
        histograms=histograms,
        success_count=success_count,
        visibility_estimate=estimate,
        wall_events=n - success_count,
    )
    return summary, records


def _per_phase_histograms(
    records: list[TrialRecord],
    config: ExperimentConfig,
    omega_m: float,
    bins_per_period: int = 20,
) -> dict[float, ArrivalHistogram]:
    width = (2.0 * math.pi / omega_m) / bins_per_period
    out: dict[float, ArrivalHistogram] = {}
    for phase in config.phase_settings:
        times = [r.arrival_time for r in records if r.phase == phase]
        out[float(phase)] = bin_arrivals(times, width, t0=config.tau_d)
    return out


def estimate_visibility(
    records: list[TrialRecord],
    phase_settings: tuple[float, ...],
) -> VisibilityEstimate:
    """Fit D1 counts per phase to A*(1 + V*cos(phase + phase0)).

    Linear least squares on [1, cos, sin] (the sin column is dropped when
    only two distinct phases are available, fixing phase0 = 0).  The
    standard error propagates Poisson count variances through the fit.
    Degenerate data -- counts concentrated in fewer than two phase bins --
    raises :class:`EstimationError`.
    """
    phases = sorted(set(float(p) for p in phase_settings))
    if len(phases) < 2:
        raise EstimationError("need at least two distinct phase settings")
    counts = np.array(
        [
            sum(
                1
                for r in records
                if r.phase == p and r.detector is Detector.D1
            )
            for p in phases
        ],
        dtype=float,
    )
    if counts.sum() < 1:
        raise EstimationError("no D1 counts to fit")
    if np.count_nonzero(counts) < 2:
        raise EstimationError("all counts in one phase bin")

    phases_arr = np.array(phases)
    if len(phases) >= 3:
        design = np.column_stack(
            [np.ones_like(phases_arr), np.cos(phases_arr), np.sin(phases_arr)]
        )
    else:
        design = np.column_stack([np.ones_like(phases_arr), np.cos(phases_arr)])
    beta, *_ = np.linalg.lstsq(design, counts, rcond=None)
    a = beta[0]
    b_cos = beta[1]
    b_sin = beta[2] if len(beta) > 2 else 0.0
    if a <= 0:
        raise EstimationError("fitted mean count level is not positive")
    modulus = math.hypot(b_cos, b_sin)
    visibility = min(max(modulus / a, 0.0), 1.0)
    phase_offset = math.atan2(-b_sin, b_cos) if modulus > 0 else 0.0

    # Poisson variance per phase bin propagated through the normal equations
    sigma_sq = np.maximum(counts, 1.0)
    gram_inv = np.linalg.inv(design.T @ design)
    cov = gram_inv @ design.T @ np.diag(sigma_sq) @ design @ gram_inv
    if modulus > 0:
        grad = np.array(
            [-modulus / a**2, b_cos / (a * modulus), b_sin / (a * modulus)]
        )[: len(beta)]
    else:
        grad = np.array([0.0, 1.0 / a, 1.0 / a])[: len(beta)]
    variance = float(grad @ cov @ grad)
    return VisibilityEstimate(
        visibility=float(visibility),
        standard_error=math.sqrt(max(variance, 0.0)),
        phase_offset=float(phase_offset),
    )


@dataclass(frozen=True)
class OscillationCheck:
    power_ratio: float
    detected: bool
    threshold: float
    n_events: int


def arrival_oscillation_check(
    records: list[TrialRecord],
    device: DeviceParams,
    threshold: float = 5.0,
) -> OscillationCheck:
    """Look for the mechanical-frequency oscillation in binned arrivals.

    Bins the recorded times, removes the smooth trend (least-squares
    a*exp(-gamma_c*t) + b), Hann-windows the residual and compares the
    periodogram power at omega_m against the mean power over frequencies
    in [1.5, 4] * omega_m.  Origin labels are not consulted: a real
    analyzer sees only clicks.
    """
    if len(records) < 100:
        raise EstimationError(
            f"need at least 100 recorded events, got {len(records)}"
        )
    derived = derive(device)
    omega_m, gamma_c = derived.omega_m, derived.gamma_c

    times = np.array([r.arrival_time for r in records])
    rel = times - times.min()
    width = default_bin_width(omega_m)
    hist = bin_arrivals(rel, width)
    counts = np.asarray(hist.counts, dtype=float)
    if len(counts) < 8:
        raise EstimationError("arrival span too short to analyze")
    centers = (np.arange(len(counts)) + 0.5) * width

    basis = np.column_stack([np.exp(-gamma_c * centers), np.ones_like(centers)])
    coef, *_ = np.linalg.lstsq(basis, counts, rcond=None)
    residual = counts - basis @ coef
    window = np.hanning(len(counts))
    tapered = residual * window

    def power(omega: float) -> float:
        return float(np.abs(np.sum(tapered * np.exp(-1j * omega * centers))) ** 2)

    p_signal = power(omega_m)
    background = np.mean([power(f * omega_m) for f in np.linspace(1.5, 4.0, 26)])
    ratio = p_signal / background if background > 0 else math.inf
    return OscillationCheck(
        power_ratio=ratio,
        detected=ratio > threshold,
        threshold=threshold,
        n_events=len(records),
    )


@dataclass(frozen=True)
class CollectionEstimate:
    seconds: float
    successes_per_second: float
    dominating_factor: str
    factors: dict[str, float]


def data_collection_estimate(
    config: ExperimentConfig, target_successes: float = 1e4
) -> CollectionEstimate:
    """Wall-clock time to accumulate the target number of postselections.

    target / (injection_rate * P_success * survival^2 * efficiency), with
    the strongest rate suppression identified.  Zero survival reports an
    unattainable (infinite) estimate.
    """
    if target_successes <= 0:
        raise ValueError("target_successes must be > 0")
    derived = derive(config.device)
    _, survival = delay_line_survival(config.delay_line, config.tau_d)
    factors = {
        "postselection-probability": derived.p_success,
        "delay-survival-squared": survival**2,
        "detector-efficiency": config.detector_efficiency,
    }
    rate = config.injection_rate * math.prod(factors.values())
    seconds = target_successes / rate if rate > 0 else math.inf
    dominating = min(factors, key=factors.get)
    return CollectionEstimate(
        seconds=seconds,
        successes_per_second=rate,
        dominating_factor=dominating,
        factors=factors,
    )


RECORD_CSV_HEADER = ["trial_index", "arrival_time_s", "detector", "phase_rad", "origin"]


def records_to_csv(records: list[TrialRecord]) -> str:
    """Serialize records with full float round-trip precision."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_CSV_HEADER)
    for r in records:
        writer.writerow(
            [
                r.trial_index,
                repr(r.arrival_time),
                r.detector.value,
                repr(r.phase),
                r.origin.value,
            ]
        )
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != RECORD_CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    return [
        TrialRecord(
            trial_index=int(row[0]),
            arrival_time=float(row[1]),
            detector=Detector(row[2]),
            phase=float(row[3]),
            origin=Origin(row[4]),
        )
        for row in reader
    ]


def summary_to_dict(summary: RunSummary, seed: int | None = None) -> dict:
    """JSON-ready view of a run summary; the seed is echoed when given."""
    out: dict = {
        "success_count": summary.success_count,
        "wall_events": summary.wall_events,
        "visibility_estimate": (
            None
            if summary.visibility_estimate is None
            else {
                "visibility": summary.visibility_estimate.visibility,
                "standard_error": summary.visibility_estimate.standard_error,
                "phase_offset": summary.visibility_estimate.phase_offset,
            }
        ),
        "histograms": {
            repr(phase): {
                "bin_width_s": hist.bin_width,
                "t0_s": hist.t0,
                "counts": list(hist.counts),
            }
            for phase, hist in summary.histograms.items()
        },
    }
    if seed is not None:
        out["seed"] = seed
    return out
