"""Foundational parameter records and scalar functions.

Conventions used throughout the package:

* Distances in km, fiber loss in dB/km.  The transmittance folds the
  detector efficiency into the channel, so detectors downstream are unit
  efficiency threshold detectors with dark counts.
* ``signal_intensity`` is the mean photon number an *interior* party
  emits; the two chain-end parties emit half of it.  The total virtual
  intensity of the N-party interference network is then (N-1)*mu.
* Entropies are binary, in bits, with the 0*log0 = 0 convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaln, xlogy

from .errors import ParameterError

__all__ = [
    "ProtocolParams",
    "ChannelParams",
    "ParitySplit",
    "binary_entropy",
    "transmittance",
    "parity_split",
    "poisson_weight",
    "intrinsic_misalignment",
    "truncation_order",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol-side knobs: party count, intensities, phase slices.

    ``decoy_intensities`` is a strictly decreasing tuple; a trailing 0.0
    (vacuum decoy) is allowed.  ``slice_count`` may be odd: the analytic
    rate formulas accept any integer M >= 2, and only the round-level
    simulator (which needs a literal M/2 slice offset) insists on even M.
    """

    n_parties: int
    signal_intensity: float
    slice_count: int
    ec_efficiency: float = 1.16
    decoy_intensities: tuple = ()
    signal_phase_misalignment: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n_parties, int) or self.n_parties < 2:
            raise ParameterError(f"n_parties must be an integer >= 2, got {self.n_parties}")
        if not self.signal_intensity > 0.0:
            raise ParameterError(f"signal_intensity must be > 0, got {self.signal_intensity}")
        if not isinstance(self.slice_count, int) or self.slice_count < 2:
            raise ParameterError(f"slice_count must be an integer >= 2, got {self.slice_count}")
        if not self.ec_efficiency >= 1.0:
            raise ParameterError(f"ec_efficiency must be >= 1, got {self.ec_efficiency}")
        if not 0.0 <= self.signal_phase_misalignment <= 0.5:
            raise ParameterError(
                f"signal_phase_misalignment must lie in [0, 0.5], got {self.signal_phase_misalignment}"
            )
        decoys = tuple(float(x) for x in self.decoy_intensities)
        object.__setattr__(self, "decoy_intensities", decoys)
        for i, x in enumerate(decoys):
            trailing_vacuum = i == len(decoys) - 1 and x == 0.0
            if x < 0.0 or (x == 0.0 and not trailing_vacuum):
                raise ParameterError("decoy intensities must be positive (trailing 0 allowed)")
        if any(a <= b for a, b in zip(decoys, decoys[1:])):
            raise ParameterError(f"decoy intensities must be strictly decreasing, got {decoys}")

    @property
    def nonzero_decoys(self) -> tuple:
        return tuple(x for x in self.decoy_intensities if x > 0.0)

    @property
    def has_vacuum_decoy(self) -> bool:
        return bool(self.decoy_intensities) and self.decoy_intensities[-1] == 0.0


@dataclass(frozen=True)
class ChannelParams:
    """Symmetric channel model: every party sits ``distance`` km from the
    measurement station over fiber with ``loss_rate`` dB/km."""

    loss_rate: float
    distance: float
    detector_efficiency: float
    dark_count: float

    def __post_init__(self):
        if self.loss_rate < 0.0:
            raise ParameterError(f"loss_rate must be >= 0, got {self.loss_rate}")
        if self.distance < 0.0:
            raise ParameterError(f"distance must be >= 0, got {self.distance}")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ParameterError(
                f"detector_efficiency must lie in (0, 1], got {self.detector_efficiency}"
            )
        if not 0.0 <= self.dark_count < 1.0:
            raise ParameterError(f"dark_count must lie in [0, 1), got {self.dark_count}")


@dataclass(frozen=True)
class ParitySplit:
    """Even/odd photon-number mass of a phase-randomized coherent source.

    ``p_odd`` is computed from ``p_even``'s complement so the pair sums
    to 1 exactly.
    """

    p_even: float
    p_odd: float

    def __post_init__(self):
        if not (0.0 <= self.p_odd <= 1.0 and 0.0 <= self.p_even <= 1.0):
            raise ParameterError("parity probabilities must lie in [0, 1]")


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2 (1-x), total on [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ParameterError(f"binary_entropy requires x in [0, 1], got {x}")
    return float(-(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)) / _LN2)


def transmittance(ch: ChannelParams) -> float:
    """Per-party transmittance eta = eta_d * 10^(-alpha L / 10)."""
    return ch.detector_efficiency * 10.0 ** (-ch.loss_rate * ch.distance / 10.0)


def parity_split(total_intensity: float) -> ParitySplit:
    """Parity decomposition of a coherent source of mean photon number t:
    p_even = e^-t cosh t, p_odd = e^-t sinh t = (1 - e^-2t)/2."""
    if total_intensity < 0.0:
        raise ParameterError(f"total_intensity must be >= 0, got {total_intensity}")
    p_odd = -math.expm1(-2.0 * total_intensity) / 2.0
    return ParitySplit(p_even=1.0 - p_odd, p_odd=p_odd)


def poisson_weight(total_intensity: float, k: int) -> float:
    """Poisson probability e^-t t^k / k!, evaluated in log space so large
    k stays finite during truncation sweeps."""
    if total_intensity < 0.0:
        raise ParameterError(f"total_intensity must be >= 0, got {total_intensity}")
    if not isinstance(k, (int,)) or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k}")
    if total_intensity == 0.0:
        return 1.0 if k == 0 else 0.0
    return float(math.exp(k * math.log(total_intensity) - total_intensity - gammaln(k + 1)))


def intrinsic_misalignment(slice_count: int) -> float:
    """Effective phase misalignment from coarse phase slicing,
    e_delta(M) = pi/M - (M^2/pi^2) sin^3(pi/M); decays like pi^3/(2 M^3)."""
    if not isinstance(slice_count, int) or slice_count < 2:
        raise ParameterError(f"slice_count must be an integer >= 2, got {slice_count}")
    m = float(slice_count)
    return math.pi / m - (m * m / math.pi**2) * math.sin(math.pi / m) ** 3


def truncation_order(total_intensity: float) -> int:
    """Smallest photon-number cutoff K with Poisson tail mass below 1e-12
    under the K >= t + 12 sqrt(t) + 30 rule."""
    if total_intensity < 0.0:
        raise ParameterError(f"total_intensity must be >= 0, got {total_intensity}")
    t = total_intensity
    return int(math.ceil(t + 12.0 * math.sqrt(t) + 30.0))
