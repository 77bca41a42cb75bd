"""Photon-number-resolved success probabilities Y_k for the honest
measurement network, including asymmetric (reduced) topologies.

Model: the k photons of the combined virtual source land independently
in branch l with probability mu_V(l) / sum(mu_V), survive transmission
with the branch's per-photon probability s(l), and — phases being
matched — exit to the branch's expected port.  A branch with n surviving
photons registers exactly one click with probability

    (1 - p_d)              if n >= 1   (photon click, other port silent)
    2 p_d (1 - p_d)        if n == 0   (dark count on one port only)

and Y_k is the probability that every branch succeeds simultaneously.

``yield_probability`` evaluates the expectation by exact enumeration
over branch occupation compositions of k (the desk-scale oracle, with a
configurable term cap).  ``yield_table`` evaluates the same expectation
through its inclusion-exclusion reduction over branch subsets, which is
algebraically identical and O(2^branches) per photon number; the test
suite pins the two against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import EnumerationLimitError, ParameterError
from .core import truncation_order

__all__ = [
    "BranchSpec",
    "BranchTopology",
    "YieldTable",
    "yield_probability",
    "yield_table",
    "gain_from_yields",
    "phase_error_rate",
]

DEFAULT_TERM_CAP = 10_000_000

_ARM_BALANCE_RTOL = 1e-9


@dataclass(frozen=True)
class BranchSpec:
    """One interference branch of the virtual-source picture.

    ``virtual_intensity`` is the mean photon number of the branch's
    combined virtual source, ``survival`` the per-photon detection
    probability; their product is the arrival intensity at the branch's
    beam splitter.
    """

    virtual_intensity: float
    survival: float

    def __post_init__(self):
        if not self.virtual_intensity > 0.0:
            raise ParameterError(f"virtual_intensity must be > 0, got {self.virtual_intensity}")
        if not 0.0 < self.survival <= 1.0:
            raise ParameterError(f"survival must lie in (0, 1], got {self.survival}")

    @property
    def arrival_intensity(self) -> float:
        return self.virtual_intensity * self.survival

    @classmethod
    def from_arms(
        cls, mu_left: float, eta_left: float, mu_right: float, eta_right: float
    ) -> "BranchSpec":
        """Build a branch from its two source arms; a valid interference
        branch needs equal arriving intensities on both arms."""
        left, right = eta_left * mu_left, eta_right * mu_right
        if not math.isclose(left, right, rel_tol=_ARM_BALANCE_RTOL):
            raise ParameterError(
                f"arm arrival intensities must match, got {left} vs {right}"
            )
        mu_v = mu_left + mu_right
        return cls(virtual_intensity=mu_v, survival=(left + right) / mu_v)


@dataclass(frozen=True)
class BranchTopology:
    """The N-1 branches of an interference chain plus the detector dark
    count shared by all branches."""

    branches: tuple
    dark_count: float

    def __post_init__(self):
        if len(self.branches) == 0:
            raise ParameterError("topology needs at least one branch")
        if not 0.0 <= self.dark_count < 1.0:
            raise ParameterError(f"dark_count must lie in [0, 1), got {self.dark_count}")
        object.__setattr__(self, "branches", tuple(self.branches))

    @property
    def total_virtual_intensity(self) -> float:
        return sum(b.virtual_intensity for b in self.branches)

    @property
    def n_parties(self) -> int:
        return len(self.branches) + 1

    @classmethod
    def symmetric(cls, n_parties: int, mu: float, eta: float, dark_count: float) -> "BranchTopology":
        """Standard chain: every branch sees virtual intensity mu and
        per-photon survival eta."""
        if n_parties < 2:
            raise ParameterError(f"n_parties must be >= 2, got {n_parties}")
        branch = BranchSpec(virtual_intensity=mu, survival=eta)
        return cls(branches=(branch,) * (n_parties - 1), dark_count=dark_count)

    @classmethod
    def chain(
        cls,
        n_parties: int,
        mu: float,
        eta: float,
        dark_count: float,
        boundaries: tuple = (False, False),
    ) -> "BranchTopology":
        """Chain with optionally broken end points.

        A boundary end party sends the full interior intensity mu but
        half of its light feeds a dead branch, so its arm enters with
        source intensity mu at effective transmittance eta/2; all other
        arms contribute mu/2 at eta.  Arriving intensities stay balanced,
        so per-branch gain and QBER match the symmetric chain while the
        virtual intensity (and hence the phase-error rate) grows.
        """
        if n_parties < 2:
            raise ParameterError(f"n_parties must be >= 2, got {n_parties}")
        if len(boundaries) != 2:
            raise ParameterError("boundaries must be a (left, right) pair of flags")
        left_b, right_b = (bool(boundaries[0]), bool(boundaries[1]))
        branches = []
        for l in range(n_parties - 1):
            if l == 0 and left_b:
                left_arm = (mu, eta / 2.0)
            else:
                left_arm = (mu / 2.0, eta)
            if l == n_parties - 2 and right_b:
                right_arm = (mu, eta / 2.0)
            else:
                right_arm = (mu / 2.0, eta)
            branches.append(BranchSpec.from_arms(*left_arm, *right_arm))
        return cls(branches=tuple(branches), dark_count=dark_count)


@dataclass(frozen=True)
class YieldTable:
    """Y_k for k = 0..truncation, with the Poisson tail mass beyond the
    truncation recorded for conservative corrections."""

    yields: tuple
    truncation: int
    tail_mass: float
    total_virtual_intensity: float

    def __post_init__(self):
        if any(not 0.0 <= y <= 1.0 for y in self.yields):
            raise ParameterError("yields must lie in [0, 1]")


def _branch_weights(topology: BranchTopology):
    """Per-branch landing probability w_l and survival s_l."""
    total = topology.total_virtual_intensity
    ws = np.array([b.virtual_intensity / total for b in topology.branches])
    ss = np.array([b.survival for b in topology.branches])
    return ws, ss


def yield_probability(topology: BranchTopology, k: int, term_cap: int = DEFAULT_TERM_CAP) -> float:
    """Y_k by exact enumeration over compositions (n_1, .., n_B) of k.

    Per-branch success factors given n photons assigned,
    (1-p_d) (1 - (1-2 p_d) (1-s)^n), are memoized per branch and photon
    count; the composition count C(k+B-1, B-1) is checked against
    ``term_cap`` before enumerating.
    """
    if not isinstance(k, int) or k < 0:
        raise ParameterError(f"k must be a nonnegative integer, got {k}")
    nb = len(topology.branches)
    n_terms = math.comb(k + nb - 1, nb - 1)
    if n_terms > term_cap:
        raise EnumerationLimitError(
            f"{n_terms} compositions of k={k} over {nb} branches exceed the cap {term_cap}"
        )
    pd = topology.dark_count
    ws, ss = _branch_weights(topology)
    log_ws = np.log(ws)
    # success factor per (branch, occupation)
    factors = np.empty((nb, k + 1))
    for l in range(nb):
        miss = (1.0 - ss[l]) ** np.arange(k + 1)
        factors[l] = (1.0 - pd) * (1.0 - (1.0 - 2.0 * pd) * miss)
    log_fact = [math.lgamma(n + 1) for n in range(k + 1)]

    total = 0.0
    comp = [0] * nb

    def recurse(level: int, remaining: int, log_w_acc: float, f_acc: float):
        nonlocal total
        if level == nb - 1:
            n = remaining
            logp = log_fact[k] - log_fact[n] + n * log_ws[level] + log_w_acc
            total += math.exp(logp) * f_acc * factors[level, n]
            return
        for n in range(remaining + 1):
            recurse(
                level + 1,
                remaining - n,
                log_w_acc + n * log_ws[level] - log_fact[n],
                f_acc * factors[level, n],
            )

    if nb == 1:
        return float(factors[0, k])
    recurse(0, k, 0.0, 1.0)
    return float(min(max(total, 0.0), 1.0))


def _yields_closed(topology: BranchTopology, ks: np.ndarray) -> np.ndarray:
    """Inclusion-exclusion form of the composition expectation:
    Y_k = (1-p_d)^B sum_S (-(1-2 p_d))^|S| (1 - q_S)^k with
    q_S = sum_{l in S} w_l s_l.  Exact, O(2^B) per k."""
    nb = len(topology.branches)
    if nb > 24:
        raise EnumerationLimitError(f"{nb} branches exceed the 2^24 subset budget")
    pd = topology.dark_count
    ws, ss = _branch_weights(topology)
    q = ws * ss
    out = np.zeros(len(ks))
    for r in range(nb + 1):
        for subset in combinations(range(nb), r):
            q_s = sum(q[i] for i in subset)
            out += (-(1.0 - 2.0 * pd)) ** r * (1.0 - q_s) ** ks
    out *= (1.0 - pd) ** nb
    # k = 0 has catastrophic cancellation at tiny p_d; its exact value is
    # the all-dark product
    if ks[0] == 0:
        out[0] = (2.0 * pd * (1.0 - pd)) ** nb
    return np.clip(out, 0.0, 1.0)


def yield_table(topology: BranchTopology, truncation: int | None = None) -> YieldTable:
    """Tabulate Y_k for k = 0..K with K from the Poisson tail rule on the
    total virtual intensity (or an explicit override)."""
    t = topology.total_virtual_intensity
    k_max = truncation_order(t) if truncation is None else int(truncation)
    ks = np.arange(k_max + 1)
    ys = _yields_closed(topology, ks)
    tail = float(poisson.sf(k_max, t))
    return YieldTable(
        yields=tuple(float(y) for y in ys),
        truncation=k_max,
        tail_mass=tail,
        total_virtual_intensity=t,
    )


def _poisson_pmf(t: float, k_max: int) -> np.ndarray:
    if t == 0.0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    ks = np.arange(k_max + 1)
    return np.exp(ks * math.log(t) - t - gammaln(ks + 1))


def gain_from_yields(table: YieldTable, topology: BranchTopology) -> float:
    """Overall gain sum_k P_t(k) Y_k plus a conservative tail correction
    bounded by the recorded tail mass."""
    t = topology.total_virtual_intensity
    pmf = _poisson_pmf(t, table.truncation)
    main = float(pmf @ np.asarray(table.yields))
    # beyond the truncation every yield is at most (1 - p_d)^B
    tail_cap = (1.0 - topology.dark_count) ** len(topology.branches)
    return main + table.tail_mass * tail_cap


def phase_error_rate(table: YieldTable, topology: BranchTopology) -> float:
    """Phase-error rate E_X: the odd-photon-number share of the gain,
    E_X = sum_{k odd} P_t(k) Y_k / sum_k P_t(k) Y_k."""
    t = topology.total_virtual_intensity
    pmf = _poisson_pmf(t, table.truncation)
    ys = np.asarray(table.yields)
    total = float(pmf @ ys)
    if total <= 0.0:
        raise ParameterError("overall gain is 0; phase error undefined")
    odd = float(pmf[1::2] @ ys[1::2])
    return odd / total
