"""Closed-form physics of a resonantly driven two-level atom in a one-sided cavity.

All rates share a caller-chosen unit; only the ratios ``|b_in|**2 / big_gamma``
and ``gamma_loss / big_gamma`` matter.  Amplitudes are normalized so that
``|b|**2`` is a photon current.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

# Slack on the Bloch-vector bound |s|^2 + z^2 <= 1/4.
BLOCH_SLACK = 1e-9

# g/kappa above this value is flagged as outside the bad-cavity regime.
BAD_CAVITY_MAX_RATIO = 0.1


class InvalidParameterError(ValueError):
    """Raised for non-physical rates."""


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a formula."""


class InvalidStateError(ValueError):
    """Raised when a state violates the Bloch-vector bound."""


def _check_rate(name: str, value: float, allow_zero: bool = False) -> None:
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise InvalidParameterError(f"{name} must be {bound}, got {value!r}")


@dataclass(frozen=True)
class AtomParams:
    """Decay rates of the atom.

    Parameters
    ----------
    big_gamma : float
        Dipole damping rate from emission through the cavity.
    gamma_loss : float
        Transverse decay rate into non-cavity modes.
    """

    big_gamma: float
    gamma_loss: float = 0.0

    def __post_init__(self) -> None:
        _check_rate("big_gamma", self.big_gamma)
        _check_rate("gamma_loss", self.gamma_loss, allow_zero=True)

    @classmethod
    def from_beta(cls, beta: float, big_gamma: float = 1.0) -> "AtomParams":
        """Build parameters with a given cavity emission fraction ``beta``."""
        if not 0.0 < beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {beta!r}")
        return cls(big_gamma, 2.0 * big_gamma * (1.0 / beta - 1.0))

    @property
    def dipole_rate(self) -> float:
        return self.big_gamma + 0.5 * self.gamma_loss

    @property
    def inversion_rate(self) -> float:
        return 2.0 * self.big_gamma + self.gamma_loss

    @property
    def beta(self) -> float:
        """Fraction of spontaneous emission leaving through the cavity."""
        return self.big_gamma / self.dipole_rate

    @property
    def coupling(self) -> float:
        """Field coupling sqrt(2 * big_gamma) between dipole and cavity port."""
        return math.sqrt(2.0 * self.big_gamma)


@dataclass(frozen=True)
class CavityParams:
    g: float
    kappa: float

    def __post_init__(self) -> None:
        _check_rate("g", self.g)
        _check_rate("kappa", self.kappa)


@dataclass(frozen=True)
class EffectiveGamma:
    big_gamma: float
    g_over_kappa: float
    bad_cavity: bool


@dataclass(frozen=True)
class BlochState:
    """Dipole expectation <sigma_minus> and inversion <sigma_z>."""

    sigma_minus: complex
    sigma_z: float

    @classmethod
    def ground(cls) -> "BlochState":
        return cls(0j, -0.5)

    @classmethod
    def excited(cls) -> "BlochState":
        return cls(0j, 0.5)

    @property
    def excitation(self) -> float:
        """Excited-state population, sigma_z + 1/2."""
        return self.sigma_z + 0.5

    def bloch_excess(self) -> float:
        """Amount by which the Bloch vector exceeds length 1/2 (squared)."""
        return abs(self.sigma_minus) ** 2 + self.sigma_z**2 - 0.25

    def is_physical(self, slack: float = BLOCH_SLACK) -> bool:
        return self.bloch_excess() <= slack

    def check(self, slack: float = BLOCH_SLACK) -> "BlochState":
        excess = self.bloch_excess()
        if not excess <= slack:
            raise InvalidStateError(
                f"Bloch bound violated by {excess:.3e} for state {self!r}"
            )
        return self


@dataclass(frozen=True)
class SteadyStateSolution:
    state: BlochState
    b_in: complex
    b_out: complex
    p_noise: float
    p_loss: float

    @property
    def intensity(self) -> float:
        return abs(self.b_in) ** 2

    @property
    def amplitude_ratio(self) -> float:
        """Real reflection coefficient b_out / b_in (undefined for zero drive)."""
        if self.b_in == 0:
            raise DomainError("amplitude ratio undefined for zero input")
        return (self.b_out / self.b_in).real


@dataclass(frozen=True)
class ResponsePoint:
    x: float
    amplitude_ratio: float
    coherent_fraction: float
    noise_fraction: float


@dataclass(frozen=True)
class PulseCheck:
    duration: float
    photons: float
    average_intensity: float
    switching_intensity: float
    exceeds: bool


def effective_gamma(cavity: CavityParams) -> EffectiveGamma:
    """Adiabatically eliminated dipole damping g**2 / kappa."""
    ratio = cavity.g / cavity.kappa
    return EffectiveGamma(
        big_gamma=cavity.g**2 / cavity.kappa,
        g_over_kappa=ratio,
        bad_cavity=ratio <= BAD_CAVITY_MAX_RATIO,
    )


def output_amplitude(params: AtomParams, b_in: complex, state: BlochState) -> complex:
    return b_in + params.coupling * state.sigma_minus


def noise_power(params: AtomParams, state: BlochState) -> float:
    """Incoherent (random phase) emission through the cavity port."""
    state.check()
    return 2.0 * params.big_gamma * (state.excitation - abs(state.sigma_minus) ** 2)


def noise_lower_bound(params: AtomParams, sigma_z: float) -> float:
    """Least incoherent emission compatible with a given inversion."""
    if not -0.5 <= sigma_z <= 0.5:
        raise DomainError(f"sigma_z must lie in [-1/2, 1/2], got {sigma_z!r}")
    return 2.0 * params.big_gamma * (sigma_z + 0.5) ** 2


def steady_state(params: AtomParams, b_in: complex) -> SteadyStateSolution:
    """Stationary solution under a constant resonant drive ``b_in``.

    With ``gamma_loss > 0`` the dipole and inversion relax at
    ``big_gamma + gamma_loss/2`` and ``2*big_gamma + gamma_loss``; the
    non-cavity emission ``gamma_loss * (sigma_z + 1/2)`` is reported as
    ``p_loss`` and kept out of ``p_noise``.
    """
    b_in = complex(b_in)
    if not (math.isfinite(b_in.real) and math.isfinite(b_in.imag)):
        raise DomainError(f"b_in must be finite, got {b_in!r}")
    g = params.big_gamma
    gd = params.dipole_rate
    intensity = abs(b_in) ** 2
    denom = 2.0 * gd**2 + 8.0 * g * intensity
    sigma_z = -(gd**2) / denom
    sigma_minus = 2.0 * params.coupling * b_in * sigma_z / gd
    state = BlochState(sigma_minus, sigma_z)
    # Factored forms avoid cancellation in sigma_z + 1/2 - |s|^2 at weak drive.
    excitation = 4.0 * g * intensity / denom
    p_noise = 64.0 * g**3 * intensity**2 / denom**2
    return SteadyStateSolution(
        state=state,
        b_in=b_in,
        b_out=output_amplitude(params, b_in, state),
        p_noise=p_noise,
        p_loss=params.gamma_loss * excitation,
    )


def steady_response_ratio(params: AtomParams, intensity: float) -> float:
    """Real ratio b_out/b_in of the stationary state at input ``intensity``."""
    if intensity < 0:
        raise DomainError(f"intensity must be >= 0, got {intensity!r}")
    g = params.big_gamma
    gd = params.dipole_rate
    return 1.0 - 4.0 * g * gd / (2.0 * gd**2 + 8.0 * g * intensity)


def _check_x(x: float) -> None:
    if not x >= 0:
        raise DomainError(f"scaled intensity must be >= 0, got {x!r}")


def response_ratio(x: float) -> float:
    """Lossless b_out/b_in at scaled intensity ``x = |b_in|**2 / big_gamma``."""
    _check_x(x)
    if math.isinf(x):
        return 1.0
    return (4.0 * x - 1.0) / (4.0 * x + 1.0)


def intensity_fractions(x: float) -> tuple[float, float]:
    """Coherent and incoherent shares of the lossless output intensity."""
    _check_x(x)
    if math.isinf(x):
        return 1.0, 0.0
    d = (4.0 * x + 1.0) ** 2
    return (4.0 * x - 1.0) ** 2 / d, 16.0 * x / d


def response_point(x: float) -> ResponsePoint:
    coherent, noise = intensity_fractions(x)
    return ResponsePoint(x, response_ratio(x), coherent, noise)


def linear_response(params: AtomParams) -> float:
    """Weak-drive reflection coefficient 1 - 2*beta."""
    return 1.0 - 2.0 * params.beta


def switching_intensity(
    params: AtomParams, rtol: float = 1e-10
) -> Optional[float]:
    """Input intensity at which the coherent reflection vanishes.

    Returns ``big_gamma / 4`` without losses.  With losses the zero of the
    stationary response is bracketed and bisected in log-intensity; ``None``
    means the response never changes sign (``beta <= 1/2``).
    """
    if params.gamma_loss == 0.0:
        return params.big_gamma / 4.0
    if linear_response(params) >= 0.0:
        return None

    lo = hi = params.big_gamma
    while steady_response_ratio(params, lo) >= 0.0:
        lo /= 4.0
    while steady_response_ratio(params, hi) <= 0.0:
        hi *= 4.0
    log_lo, log_hi = math.log(lo), math.log(hi)
    # Bisection on log-intensity; tolerance on log is the relative tolerance.
    while log_hi - log_lo > rtol:
        mid = 0.5 * (log_lo + log_hi)
        if steady_response_ratio(params, math.exp(mid)) < 0.0:
            log_lo = mid
        else:
            log_hi = mid
    return math.exp(0.5 * (log_lo + log_hi))


def two_photon_pulse_check(
    params: AtomParams, duration: float, photons: float = 2.0
) -> PulseCheck:
    """Compare the mean intensity of a short pulse with the switching intensity."""
    if not (math.isfinite(duration) and duration > 0):
        raise DomainError(f"duration must be > 0, got {duration!r}")
    average = photons / duration
    threshold = params.big_gamma / 4.0
    return PulseCheck(duration, photons, average, threshold, average > threshold)
