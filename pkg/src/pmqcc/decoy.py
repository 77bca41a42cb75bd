"""Finite-decoy-state estimation: even-order yield lower bounds via a
pairwise-elimination ladder, the phase-error upper bound they certify,
and the resulting key-rate lower bound.

Writing t_x = (N-1) x for the total virtual intensity of decoy setting x
and A_x = e^{t_x} Q_x - Q_0, the observed gains obey

    A_x = sum_{k >= 1} t_x^k / k! * Y_k .

To lower-bound an even order Y_m the ladder linearly combines the A_x of
the m+1 smallest nonzero intensities so that the orders {1..m-1, m+1}
cancel; with descending intensities the surviving combination has a
positive coefficient on Y_m and negative coefficients on every retained
higher order, so dropping those orders can only lower the estimate.  The
sign pattern is asserted at runtime: a violation (or an ill-conditioned
combination) raises ``DegenerateGeometryError`` instead of silently
returning an unsafe bound.

For three nonzero decoys the m=2 rung reduces to a closed form, kept
separately as ``y2_lower_3party`` and pinned against the general ladder
by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChannelParams, ProtocolParams, transmittance
from .errors import (
    DegenerateGeometryError,
    InsufficientIntensitiesError,
    ParameterError,
)
from .interference import branch_gain_avg, branch_qber_avg
from .keyrate import RateReport, _assemble, _marginals

__all__ = [
    "DecoyGains",
    "DecoyBounds",
    "n_cut_for",
    "simulate_decoy_gains",
    "y2_lower_3party",
    "yields_lower_general",
    "phase_error_upper",
    "decoy_bounds",
    "rate_lower",
]

# adjacent intensities closer than this (relatively) make the
# elimination denominator collapse
MIN_RELATIVE_SEPARATION = 1e-3
# cap on sum(|c_i| A_i) / |G|: beyond this the combination has cancelled
# away too many digits to certify anything
MAX_CONDITION = 1e9


@dataclass(frozen=True)
class DecoyGains:
    """Observed overall gains per decoy intensity (per-interior-party
    convention, descending, nonzero) plus the vacuum gain."""

    intensities: tuple
    gains: tuple
    vacuum_gain: float

    def __post_init__(self):
        if len(self.intensities) != len(self.gains):
            raise ParameterError("intensities and gains must align")
        if any(x <= 0.0 for x in self.intensities):
            raise ParameterError("decoy intensities must be positive; vacuum is separate")
        if any(a <= b for a, b in zip(self.intensities, self.intensities[1:])):
            raise ParameterError("decoy intensities must be strictly decreasing")
        if any(not 0.0 <= g <= 1.0 for g in self.gains) or not 0.0 <= self.vacuum_gain <= 1.0:
            raise ParameterError("gains must lie in [0, 1]")


@dataclass(frozen=True)
class DecoyBounds:
    """Certified-safe estimates: yield lower bounds for the targeted even
    orders, the phase-error upper bound, and the rate lower bound."""

    y_lower: dict
    n_cut: int
    phase_error_upper: float | None = None
    rate_lower: float | None = None


def n_cut_for(n_parties: int) -> int:
    """Highest even yield order entering the phase-error bound:
    N-1 for odd N, N for even N."""
    if n_parties < 2:
        raise ParameterError(f"n_parties must be >= 2, got {n_parties}")
    return n_parties - 1 if n_parties % 2 == 1 else n_parties


def simulate_decoy_gains(
    pp: ProtocolParams, ch: ChannelParams, intensities: tuple | None = None
) -> DecoyGains:
    """Forward-simulate the honest-model gains feeding the estimator:
    Q_x = Q_branch(eta x)^(N-1) for each nonzero decoy intensity and
    Q_0 = (2 p_d (1-p_d))^(N-1) for vacuum."""
    if intensities is None:
        intensities = pp.decoy_intensities
    nonzero = tuple(x for x in intensities if x > 0.0)
    eta = transmittance(ch)
    n = pp.n_parties
    gains = tuple(branch_gain_avg(eta * x, ch.dark_count) ** (n - 1) for x in nonzero)
    q_vac = (2.0 * ch.dark_count * (1.0 - ch.dark_count)) ** (n - 1)
    return DecoyGains(intensities=nonzero, gains=gains, vacuum_gain=q_vac)


def _check_separation(ts) -> None:
    for hi, lo in zip(ts, ts[1:]):
        if hi <= lo or (hi - lo) / hi < MIN_RELATIVE_SEPARATION:
            raise DegenerateGeometryError(
                f"decoy intensities too close: {hi} vs {lo}"
            )


def _eliminate(ts, kill_orders):
    """Pairwise elimination of the given photon-number orders.

    Returns the final coefficient vector c over the inputs, normalized
    after each stage to keep scales bounded.  Each stage replaces
    adjacent combinations (u, v) with phi_k(v) u - phi_k(u) v, which
    zeroes the order-k coefficient phi_k(c) = sum_i c_i t_i^k / k!.
    """
    combos = [np.eye(len(ts))[i] for i in range(len(ts))]
    ts = np.asarray(ts, dtype=float)

    def phi(c, k):
        return float(np.dot(c, ts**k)) / math.factorial(k)

    for k in kill_orders:
        combos = [
            phi(combos[i + 1], k) * combos[i] - phi(combos[i], k) * combos[i + 1]
            for i in range(len(combos) - 1)
        ]
        combos = [c / np.max(np.abs(c)) for c in combos]
    (c,) = combos
    return c


def _ladder_bound(ts, a_values, m: int, kill_orders, check_orders: int) -> float:
    """Lower bound on Y_m from intensities ts (descending) and their
    vacuum-subtracted scaled gains A.  Verifies the sign pattern that
    makes dropping the retained higher orders safe."""
    _check_separation(ts)
    c = _eliminate(ts, kill_orders)
    ts = np.asarray(ts, dtype=float)
    t_max = float(ts[0])

    def phi(k):
        return float(np.dot(c, ts**k)) / math.factorial(k)

    g_m = phi(m)
    if g_m < 0.0:
        c = -c
        g_m = -g_m
    if g_m <= 0.0:
        raise DegenerateGeometryError("elimination denominator collapsed to 0")
    # normalized comparison scale: psi_k = phi_k k! / t_max^k is O(1)
    psi_m = g_m * math.factorial(m) / t_max**m
    for k in range(1, check_orders + 1):
        if k == m or k in kill_orders:
            continue
        psi_k = phi(k) * math.factorial(k) / t_max**k
        if psi_k > 1e-9 * psi_m:
            raise DegenerateGeometryError(
                f"order-{k} elimination coefficient has the unsafe sign"
            )
    # the k -> infinity sign is carried by the largest intensity
    if c[0] > 0.0:
        raise DegenerateGeometryError("asymptotic elimination coefficient has the unsafe sign")

    a_values = np.asarray(a_values, dtype=float)
    g = float(np.dot(c, a_values))
    g_abs = float(np.dot(np.abs(c), np.clip(a_values, 0.0, None)))
    if g != 0.0 and g_abs / abs(g) > MAX_CONDITION:
        raise DegenerateGeometryError(
            f"elimination too ill-conditioned (cancellation {g_abs / abs(g):.1e})"
        )
    return float(min(max(g / g_m, 0.0), 1.0))


def _scaled_gain_excesses(g: DecoyGains, scale: float, intensities):
    ts = [scale * x for x in intensities]
    idx = {x: i for i, x in enumerate(g.intensities)}
    a_values = [
        math.exp(t) * g.gains[idx[x]] - g.vacuum_gain for x, t in zip(intensities, ts)
    ]
    return ts, a_values


def y2_lower_3party(g: DecoyGains) -> float:
    """Closed-form Y_2 lower bound from exactly three nonzero decoys
    plus vacuum (three-party network, virtual intensities 2x)."""
    if len(g.intensities) != 3:
        raise InsufficientIntensitiesError(
            f"the closed form needs exactly 3 nonzero decoys, got {len(g.intensities)}"
        )
    nu, om, ta = g.intensities
    tn, to, tt = 2.0 * nu, 2.0 * om, 2.0 * ta
    _check_separation([tn, to, tt])
    q0 = g.vacuum_gain
    a_nu = math.exp(tn) * g.gains[0] - q0
    a_om = math.exp(to) * g.gains[1] - q0
    a_ta = math.exp(tt) * g.gains[2] - q0
    c_no3 = to * tn**3 - tn * to**3
    c_ot3 = tt * to**3 - to * tt**3
    num = c_no3 * (tt * a_om - to * a_ta) - c_ot3 * (to * a_nu - tn * a_om)
    den = c_no3 * (tt * to**2 - to * tt**2) - c_ot3 * (to * tn**2 - tn * to**2)
    if den <= 0.0:
        raise DegenerateGeometryError("closed-form denominator is not positive")
    return float(min(max(2.0 * num / den, 0.0), 1.0))


def yields_lower_general(
    g: DecoyGains, total_intensity_scale: float, n_cut: int
) -> DecoyBounds:
    """Lower bounds for every even order up to n_cut.

    The Y_m rung eliminates orders {1..m-1, m+1} using the m+1 smallest
    nonzero intensities (all three of them in the three-party case,
    where the rung reproduces the closed form exactly).
    """
    if n_cut < 2 or n_cut % 2 != 0:
        raise ParameterError(f"n_cut must be a positive even integer, got {n_cut}")
    if len(g.intensities) < n_cut + 1:
        raise InsufficientIntensitiesError(
            f"bounding Y_{n_cut} needs {n_cut + 1} nonzero decoys plus vacuum, "
            f"got {len(g.intensities)}"
        )
    t_all = [total_intensity_scale * x for x in g.intensities]
    check_orders = max(int(math.ceil(max(t_all) + 12.0 * math.sqrt(max(t_all)) + 30.0)), n_cut + 20)
    y_lower = {}
    for m in range(2, n_cut + 1, 2):
        chosen = g.intensities[-(m + 1):]
        ts, a_values = _scaled_gain_excesses(g, total_intensity_scale, chosen)
        kill = list(range(1, m)) + [m + 1]
        y_lower[m] = _ladder_bound(ts, a_values, m, kill, check_orders)
    return DecoyBounds(y_lower=y_lower, n_cut=n_cut)


def phase_error_upper(
    y_lower: dict, signal_intensity: float, q_mu: float, q_vacuum: float, n_parties: int
) -> float:
    """Certified upper bound on the phase-error rate: subtract from 1 the
    even-order mass that the yield bounds guarantee,
    1 - e^-t Y_0/Q - sum_{even m} e^-t t^m/m! Y_m^L/Q with t=(N-1) mu."""
    if q_mu <= 0.0:
        raise ParameterError("phase_error_upper needs a positive signal gain")
    t = (n_parties - 1) * signal_intensity
    bound = 1.0 - math.exp(-t) * q_vacuum / q_mu
    for m, y_l in sorted(y_lower.items()):
        bound -= math.exp(-t) * t**m / math.factorial(m) * y_l / q_mu
    return float(min(max(bound, 0.0), 1.0))


def _estimation_pipeline(pp: ProtocolParams, ch: ChannelParams):
    n = pp.n_parties
    n_cut = n_cut_for(n)
    if not pp.has_vacuum_decoy:
        raise InsufficientIntensitiesError("the estimator needs a vacuum (0) decoy intensity")
    if len(pp.nonzero_decoys) < n_cut + 1:
        raise InsufficientIntensitiesError(
            f"N={n} needs {n_cut + 1} nonzero decoys plus vacuum, got {len(pp.nonzero_decoys)}"
        )
    gains = simulate_decoy_gains(pp, ch)
    partial = yields_lower_general(gains, float(n - 1), n_cut)

    arrival = transmittance(ch) * pp.signal_intensity
    q_mu = branch_gain_avg(arrival, ch.dark_count) ** (n - 1)
    e_x_u = phase_error_upper(partial.y_lower, pp.signal_intensity, q_mu, gains.vacuum_gain, n)

    branch_e = branch_qber_avg(arrival, ch.dark_count, pp.slice_count)
    prefactor = (2.0 / pp.slice_count) ** (n - 1)
    report = _assemble(prefactor, q_mu, _marginals(branch_e, n), e_x_u, pp.ec_efficiency)
    bounds = DecoyBounds(
        y_lower=partial.y_lower, n_cut=n_cut, phase_error_upper=e_x_u, rate_lower=report.rate
    )
    return bounds, report


def decoy_bounds(pp: ProtocolParams, ch: ChannelParams) -> DecoyBounds:
    """Full estimation pipeline on simulated honest gains: yield bounds,
    phase-error upper bound, and the certified rate lower bound."""
    bounds, _ = _estimation_pipeline(pp, ch)
    return bounds


def rate_lower(pp: ProtocolParams, ch: ChannelParams) -> RateReport:
    """Certified key-rate lower bound as a rate report; ``phase_error``
    carries the upper bound used in the privacy term."""
    _, report = _estimation_pipeline(pp, ch)
    return report
