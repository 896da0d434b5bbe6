"""Beam-splitter algebra for the nested interferometers.

The inner Mach-Zehnder holds the optomechanical cavity in one arm; detecting
a photon at its dark port postselects a displaced mechanical branch.  The
outer time-bin interferometer splits the photon into early/late components
whose interference, after equal delays, reads out the coherence between the
ground-state and one-phonon mechanical branches.

All states live in the single-photon sector: each term of a
:class:`JointState` occupies exactly one optical mode and carries a
mechanical label.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from enum import Enum

from .constants import STATE_NORM_TOL
from .quantum import (
    CoherentLabel,
    CouplingParams,
    FockLabel,
    MechLabel,
    VACUUM,
    check_weak_coupling,
    displacement_at,
    kerr_phase_at,
    mechanical_label_at,
)

SQRT_HALF = 1.0 / math.sqrt(2.0)

# Guard on the dimensionless coupling for protocol-state construction;
# keeps |alpha| <= 2*kappa < 1 so the coherent-label algebra stays valid.
KAPPA_GUARD = 0.5


class InvalidStateError(ValueError):
    """A joint state does not have the shape an operation requires."""


class OpticalMode(Enum):
    CAVITY_A = "cavity-A"
    CAVITY_B = "cavity-B"
    DELAY_1 = "delay-1"
    DELAY_2 = "delay-2"
    SHORT_PATH = "short-path"
    DETECTOR_D1 = "detector-D1"
    DETECTOR_D2 = "detector-D2"


@dataclass(frozen=True)
class JointTerm:
    mode: OpticalMode
    weight: complex
    mech: MechLabel


@dataclass(frozen=True)
class JointState:
    """Superposition of (optical mode, mechanical label) terms.

    ``normalized`` asserts sum |weight|^2 = 1 within tolerance (mechanical
    labels are unit norm by construction).  ``cross_coherence`` records the
    factor multiplying interference cross terms between distinct mechanical
    branches, 1 for a fully coherent state.
    """

    terms: tuple[JointTerm, ...]
    normalized: bool = True
    cross_coherence: float = 1.0

    def __post_init__(self) -> None:
        if self.normalized:
            total = self.weight_norm_sq
            if abs(total - 1.0) > STATE_NORM_TOL:
                raise InvalidStateError(
                    f"normalized state has weight norm {total!r}, not 1"
                )

    @property
    def weight_norm_sq(self) -> float:
        return sum(abs(t.weight) ** 2 for t in self.terms)


def canonicalize(terms: list[JointTerm]) -> tuple[JointTerm, ...]:
    """Merge terms sharing (mode, mech) and drop exact zero weights."""
    merged: dict[tuple[OpticalMode, MechLabel], complex] = {}
    for t in terms:
        key = (t.mode, t.mech)
        merged[key] = merged.get(key, 0j) + t.weight
    return tuple(
        JointTerm(mode, w, mech) for (mode, mech), w in merged.items() if w != 0
    )


def apply_beam_splitter(
    state: JointState, mode_a: OpticalMode, mode_b: OpticalMode
) -> JointState:
    """50/50 beam splitter mixing two modes, |a> -> (|a>+|b>)/sqrt2,
    |b> -> (|a>-|b>)/sqrt2.  Terms in other modes pass through unchanged.

    Preserves sum |weight|^2 exactly (parallelogram law), which the tests
    assert to 1e-12 on every application.
    """
    out: list[JointTerm] = []
    for t in state.terms:
        if t.mode == mode_a:
            out.append(JointTerm(mode_a, t.weight * SQRT_HALF, t.mech))
            out.append(JointTerm(mode_b, t.weight * SQRT_HALF, t.mech))
        elif t.mode == mode_b:
            out.append(JointTerm(mode_a, t.weight * SQRT_HALF, t.mech))
            out.append(JointTerm(mode_b, -t.weight * SQRT_HALF, t.mech))
        else:
            out.append(t)
    return replace(state, terms=canonicalize(out))


@dataclass(frozen=True)
class DecoherenceSpec:
    """Coherence decay of the mechanical superposition during storage."""

    tau_dec: float  # seconds, 1/e coherence time
    form: str = "exponential"

    def __post_init__(self) -> None:
        if self.tau_dec <= 0:
            raise ValueError(f"tau_dec must be > 0, got {self.tau_dec}")
        if self.form != "exponential":
            raise ValueError(f"unsupported decoherence form {self.form!r}")

    def coherence_at(self, tau_d: float) -> float:
        if tau_d < 0:
            raise ValueError(f"tau_d must be >= 0, got {tau_d}")
        return math.exp(-tau_d / self.tau_dec)


@dataclass(frozen=True)
class FringeOutcome:
    """Detection probabilities at one phase setting plus the swept visibility."""

    p_d1: float
    p_d2: float
    visibility: float

    def __post_init__(self) -> None:
        if self.p_d1 + self.p_d2 > 1.0 + 1e-12:
            raise ValueError("detection probabilities exceed 1")


def state_after_interaction(params: CouplingParams, t_c: float) -> JointState:
    """Joint state after the photon spent time t_c in the cavity arm.

    (|A>|alpha(t_c),phi(t_c)> + |B>|0>)/sqrt2: the cavity-A branch carries
    the displaced mechanical label, the reference arm leaves it in vacuum.
    """
    if t_c < 0:
        raise ValueError(f"t_c must be >= 0, got {t_c}")
    if params.kappa >= KAPPA_GUARD:
        raise ValueError(
            f"kappa = {params.kappa} violates the weak-coupling guard "
            f"(requires kappa < {KAPPA_GUARD})"
        )
    label = mechanical_label_at(params, t_c)
    check_weak_coupling(label)
    return JointState(
        terms=(
            JointTerm(OpticalMode.CAVITY_A, SQRT_HALF, label),
            JointTerm(OpticalMode.CAVITY_B, SQRT_HALF, VACUUM),
        )
    )


def dark_port_postselect(
    state: JointState,
) -> tuple[tuple[tuple[complex, MechLabel], ...], float]:
    """Project onto the dark-port optical state (|1,0> - |0,1>)/sqrt2.

    Returns the unnormalized mechanical branch, here
    (exp(i*phi)|alpha> - |0>)/2, and the exact success probability
    (1 - exp(-|alpha|^2/2)*cos(phi))/2.  Without coupling the dark port is
    perfectly dark and the probability vanishes; for small alpha it
    approaches |alpha|^2/4.
    """
    by_mode = {t.mode: t for t in state.terms}
    if len(state.terms) != 2 or set(by_mode) != {
        OpticalMode.CAVITY_A,
        OpticalMode.CAVITY_B,
    }:
        raise InvalidStateError(
            "postselection requires a two-term state over the cavity modes"
        )
    a, b = by_mode[OpticalMode.CAVITY_A], by_mode[OpticalMode.CAVITY_B]
    for t in (a, b):
        if abs(t.weight - SQRT_HALF) > 1e-9:
            raise InvalidStateError("cavity-arm weights must both be 1/sqrt2")
        if not isinstance(t.mech, CoherentLabel):
            raise InvalidStateError("postselection expects coherent labels")
        check_weak_coupling(t.mech)
    if b.mech != VACUUM:
        raise InvalidStateError("reference-arm mechanical label must be vacuum")

    branch = ((0.5 + 0j, a.mech), (-0.5 + 0j, b.mech))
    alpha, phi = a.mech.alpha, a.mech.phase
    p_success = 0.5 * (1.0 - math.exp(-0.5 * abs(alpha) ** 2) * math.cos(phi))
    return branch, p_success


def postselect_prob_exact(params: CouplingParams, t_c: float) -> float:
    """Exact dark-port success probability at residence time t_c."""
    _, p = dark_port_postselect(state_after_interaction(params, t_c))
    return p


def one_phonon_weight(params: CouplingParams, t_c: float) -> complex:
    """Amplitude of the |1>_m component of the postselected branch.

    (alpha/2) * exp(i*phi) * exp(-|alpha|^2/2): the paper-level small-alpha
    amplitude alpha/2 with the Gaussian normalization and Kerr phase kept.
    """
    alpha = displacement_at(params, t_c)
    phi = kerr_phase_at(params, t_c)
    return 0.5 * alpha * cmath.exp(1j * phi) * math.exp(-0.5 * abs(alpha) ** 2)


def timebin_state_after_early_pass(
    params: CouplingParams, t_c: float
) -> JointState:
    """Entangled state once the early component has cleared the dark port.

    Delay line 1 holds the large component with the mechanics in vacuum;
    delay line 2 holds the small one-phonon component with exact weight
    one_phonon_weight(t_c)/sqrt2.  Unnormalized.
    """
    if t_c < 0:
        raise ValueError(f"t_c must be >= 0, got {t_c}")
    w2 = one_phonon_weight(params, t_c) * SQRT_HALF
    terms = [JointTerm(OpticalMode.DELAY_1, SQRT_HALF, VACUUM)]
    if w2 != 0:
        terms.append(JointTerm(OpticalMode.DELAY_2, w2, FockLabel(1)))
    return JointState(terms=canonicalize(terms), normalized=False)


def apply_decoherence(
    state: JointState, spec: DecoherenceSpec, tau_d: float
) -> tuple[JointState, float]:
    """Attach the storage-decoherence factor d = exp(-tau_d/tau_dec).

    Diagonal weights are untouched; only the cross coherence between
    distinct mechanical branches decays.
    """
    d = spec.coherence_at(tau_d)
    return replace(state, cross_coherence=state.cross_coherence * d), d


def _balance_factor(survival_early: float, survival_late: float) -> float:
    """Amplitude balance 2*sqrt(s_e*s_l)/(s_e+s_l); 1 iff survivals equal."""
    if survival_early == 0.0 and survival_late == 0.0:
        return 0.0
    return (
        2.0
        * math.sqrt(survival_early * survival_late)
        / (survival_early + survival_late)
    )


def final_fringe(
    params: CouplingParams,
    t_c: float,
    phase: float,
    coherence: float,
    loss_early: float = 0.0,
    loss_late: float = 0.0,
) -> FringeOutcome:
    """Detection probabilities after the closing beam splitter.

    Both time-bin components carry the same one-phonon mechanical label and
    the same |alpha(t_c)|, so they interfere; the early branch amplitude is
    scaled by sqrt(1-loss_early) (its delay line), the late branch by
    sqrt(1-loss_late).  With the overall one-phonon channel weight
    W = |alpha|^2 exp(-|alpha|^2)/4:

        p_D1,D2 = W * (s_e+s_l)/4 * (1 +/- B*d*cos(phase)),
        B = 2*sqrt(s_e*s_l)/(s_e+s_l).

    The swept visibility is B*d: equal losses leave it at the coherence d.
    """
    if not 0.0 <= coherence <= 1.0:
        raise ValueError(f"coherence must be in [0, 1], got {coherence}")
    for name, loss in (("loss_early", loss_early), ("loss_late", loss_late)):
        if not 0.0 <= loss < 1.0:
            raise ValueError(f"{name} must be in [0, 1), got {loss}")
    s_e, s_l = 1.0 - loss_early, 1.0 - loss_late
    weight = abs(one_phonon_weight(params, t_c)) ** 2  # |alpha|^2 e^{-|alpha|^2}/4
    balance = _balance_factor(s_e, s_l)
    envelope = weight * (s_e + s_l) / 4.0
    modulation = balance * coherence * math.cos(phase)
    return FringeOutcome(
        p_d1=envelope * (1.0 + modulation),
        p_d2=envelope * (1.0 - modulation),
        visibility=balance * coherence,
    )


def sweep_visibility(
    params: CouplingParams,
    t_c: float,
    spec: DecoherenceSpec,
    tau_d_grid: list[float],
    loss_early: float = 0.0,
    loss_late: float = 0.0,
) -> list[tuple[float, float]]:
    """Visibility versus storage delay: B * exp(-tau_d/tau_dec) per point."""
    if not tau_d_grid:
        raise ValueError("tau_d_grid must be non-empty")
    if any(b <= a for a, b in zip(tau_d_grid, tau_d_grid[1:])):
        raise ValueError("tau_d_grid must be strictly ascending")
    out = []
    for tau_d in tau_d_grid:
        d = spec.coherence_at(tau_d)
        fringe = final_fringe(params, t_c, 0.0, d, loss_early, loss_late)
        out.append((tau_d, fringe.visibility))
    return out
