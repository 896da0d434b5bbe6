"""Coherent-state algebra and the single-photon optomechanical evolution.

A single photon resident in the cavity drives the mechanical mode (frequency
``omega_m``, coupling ``g = kappa * omega_m``) from its ground state into a
periodically displaced coherent state

    |psi(t)> = exp(i*phi(t)) |alpha(t)>,
    alpha(t) = kappa * (1 - exp(-i*omega_m*t)),
    phi(t)   = kappa**2 * (omega_m*t - sin(omega_m*t)).

Everything here is closed-form except :func:`evolve_fock_oracle`, which
evolves the same Hamiltonian by spectral decomposition in a truncated number
basis and exists purely to validate the closed forms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .constants import DEFAULT_N_TRUNC, NORM_DRIFT_TOL, TRUNCATION_LEAKAGE_MAX

# Weak-coupling guard: protocol states must keep the displaced amplitude
# well below one phonon's worth; enforced where labels enter joint states.
WEAK_COUPLING_ALPHA_MAX = 1.0


class TruncationError(RuntimeError):
    """Truncated-basis evolution leaked more population than allowed."""

    def __init__(self, leakage: float, n_trunc: int):
        super().__init__(
            f"truncation leakage {leakage:.3e} exceeds "
            f"{TRUNCATION_LEAKAGE_MAX:.1e} at n_trunc={n_trunc}; increase n_trunc"
        )
        self.leakage = leakage
        self.n_trunc = n_trunc


@dataclass(frozen=True)
class CouplingParams:
    """Dimensionless coupling ``kappa = g / omega_m`` and mechanical frequency."""

    kappa: float
    omega_m: float  # rad/s

    def __post_init__(self) -> None:
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if self.omega_m <= 0:
            raise ValueError(f"omega_m must be > 0, got {self.omega_m}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_m


@dataclass(frozen=True)
class CoherentLabel:
    """A coherent state |alpha> carrying an accumulated Kerr phase.

    Represents exp(i*phase)|alpha>.  The label itself is unit norm; weights
    of superposition branches live outside, in the joint-state terms.
    """

    alpha: complex
    phase: float = 0.0

    @property
    def modulus(self) -> float:
        return abs(self.alpha)


@dataclass(frozen=True)
class FockLabel:
    """A number state |n> of the mechanical mode."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"occupation must be >= 0, got {self.n}")


MechLabel = CoherentLabel | FockLabel

VACUUM = CoherentLabel(0j, 0.0)


def check_weak_coupling(label: CoherentLabel) -> None:
    """Reject labels outside the weak-coupling regime (|alpha| >= 1)."""
    if abs(label.alpha) >= WEAK_COUPLING_ALPHA_MAX:
        raise ValueError(
            f"|alpha| = {abs(label.alpha):.3g} is outside the weak-coupling "
            f"regime (requires |alpha| < {WEAK_COUPLING_ALPHA_MAX})"
        )


def displacement_at(params: CouplingParams, t: float) -> complex:
    """Coherent displacement alpha(t) = kappa*(1 - exp(-i*omega_m*t)).

    Periodic with the mechanical period, bounded by ``2*kappa``.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return params.kappa * (1.0 - cmath.exp(-1j * params.omega_m * t))


def kerr_phase_at(params: CouplingParams, t: float) -> float:
    """Accumulated phase phi(t) = kappa**2*(omega_m*t - sin(omega_m*t))."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    theta = params.omega_m * t
    return params.kappa**2 * (theta - math.sin(theta))


def mechanical_label_at(params: CouplingParams, t: float) -> CoherentLabel:
    """Mechanical state exp(i*phi(t))|alpha(t)> after residence time t."""
    return CoherentLabel(displacement_at(params, t), kerr_phase_at(params, t))


def coherent_overlap(a: CoherentLabel, b: CoherentLabel) -> complex:
    """Inner product <b|a> of two phase-carrying coherent labels.

    <beta|alpha> = exp(-|alpha|^2/2 - |beta|^2/2 + conj(beta)*alpha); the
    Kerr phases enter as exp(i*(phase_a - phase_b)).  Modulus is <= 1 and
    the overlap of a label with itself is exactly 1.
    """
    exponent = (
        -0.5 * abs(a.alpha) ** 2
        - 0.5 * abs(b.alpha) ** 2
        + b.alpha.conjugate() * a.alpha
    )
    return cmath.exp(1j * (a.phase - b.phase)) * cmath.exp(exponent)


def mech_overlap(a: MechLabel, b: MechLabel) -> complex:
    """Inner product <b|a> for any pair of mechanical labels."""
    if isinstance(a, CoherentLabel) and isinstance(b, CoherentLabel):
        return coherent_overlap(a, b)
    if isinstance(a, FockLabel) and isinstance(b, FockLabel):
        return 1.0 + 0j if a.n == b.n else 0j
    if isinstance(a, CoherentLabel) and isinstance(b, FockLabel):
        # <n|exp(i phase)|alpha> = exp(i phase) e^{-|alpha|^2/2} alpha^n/sqrt(n!)
        return (
            cmath.exp(1j * a.phase)
            * cmath.exp(-0.5 * abs(a.alpha) ** 2)
            * a.alpha**b.n
            / math.sqrt(math.factorial(b.n))
        )
    return mech_overlap(b, a).conjugate()  # type: ignore[arg-type]


@dataclass(frozen=True)
class FockVector:
    """Number-basis coefficients c_0..c_{n_trunc} of a mechanical state."""

    amplitudes: np.ndarray  # complex, length n_trunc + 1
    n_trunc: int

    def __post_init__(self) -> None:
        if self.n_trunc < 0:
            raise ValueError("n_trunc must be >= 0")
        if len(self.amplitudes) != self.n_trunc + 1:
            raise ValueError(
                f"expected {self.n_trunc + 1} amplitudes, got {len(self.amplitudes)}"
            )

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def leakage(self) -> float:
        """Population missing from the truncated basis, 1 - sum |c_n|^2."""
        return 1.0 - self.norm_sq


def fock_expand(label: CoherentLabel, n_trunc: int) -> FockVector:
    """Expand exp(i*phase)|alpha> in the number basis up to n_trunc.

    c_n = exp(i*phase) * exp(-|alpha|^2/2) * alpha^n / sqrt(n!).
    """
    if n_trunc < 0:
        raise ValueError("n_trunc must be >= 0")
    n = np.arange(n_trunc + 1)
    # alpha^n / sqrt(n!) via cumulative product; stable for |alpha| < 1
    ratios = np.ones(n_trunc + 1, dtype=complex)
    if n_trunc > 0:
        ratios[1:] = label.alpha / np.sqrt(n[1:])
    amps = np.cumprod(ratios)
    amps *= cmath.exp(1j * label.phase) * math.exp(-0.5 * abs(label.alpha) ** 2)
    return FockVector(amps, n_trunc)


@lru_cache(maxsize=64)
def _spectral(kappa: float, n_trunc: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of H/(hbar*omega_m) = n_hat - kappa*(c + c_dag).

    The Hamiltonian is time independent, so the decomposition is computed
    once per (kappa, n_trunc) and reused for every evolution time.
    """
    dim = n_trunc + 1
    h = np.diag(np.arange(dim, dtype=float))
    off = kappa * np.sqrt(np.arange(1, dim))
    h[np.arange(dim - 1), np.arange(1, dim)] = -off
    h[np.arange(1, dim), np.arange(dim - 1)] = -off
    evals, evecs = np.linalg.eigh(h)
    return evals, evecs


def evolve_fock_oracle(
    params: CouplingParams, t: float, n_trunc: int = DEFAULT_N_TRUNC
) -> FockVector:
    """Evolve the mechanical ground state under the single-photon Hamiltonian.

    Works in the truncated number basis with H/hbar = omega_m*n_hat
    - g*(c + c_dag), by spectral decomposition (exact to machine precision
    at these sizes).  Independent of the closed-form coherent solution, so
    the two can be cross-validated.

    Raises :class:`TruncationError` if population reaches the top of the
    truncated basis or the norm drifts beyond tolerance.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    evals, evecs = _spectral(params.kappa, n_trunc)
    theta = params.omega_m * t
    psi0 = evecs[0, :].conjugate()  # <eigvec_k|vacuum>
    psi = evecs @ (np.exp(-1j * evals * theta) * psi0)
    vec = FockVector(psi, n_trunc)
    # Spectral evolution is unitary, so norm drift is roundoff; the physical
    # truncation audit is population at the top of the basis.
    top = float(abs(psi[-1]) ** 2)
    drift = abs(1.0 - vec.norm_sq)
    leakage = max(top, drift)
    if leakage > TRUNCATION_LEAKAGE_MAX or drift > NORM_DRIFT_TOL:
        raise TruncationError(leakage, n_trunc)
    return vec


def fidelity(a: FockVector, b: FockVector) -> float:
    """|<a|b>|^2 between two truncated states of equal dimension."""
    if a.n_trunc != b.n_trunc:
        raise ValueError(
            f"dimension mismatch: n_trunc {a.n_trunc} vs {b.n_trunc}"
        )
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
