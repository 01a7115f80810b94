"""Linear conjugation of a bounded sequence to a monic one.

With ``alpha_k = prod_{n>k} a_n ** (1 / D_{k,n})`` over the leading
coefficients ``a_n``, the maps ``chi_k(z) = alpha_k * z`` conjugate ``P_k`` to
``chi_k o P_k o chi_{k-1}^{-1}``, whose leading coefficient is 1.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from iterjulia.exceptions import BranchObstruction, IndexBeyondHorizon
from iterjulia.polyseq import Bounds, DegreeLedger, Rescaled, SequenceSpec


logger = logging.getLogger(__name__)

#: Leads closer than this to 1 are treated as already monic
MONIC_TOL = 1e-14

#: Smallest angular distance (degrees) between a lead and the branch cut
MIN_CLEARANCE = 0.5

#: Horizon increment used while searching for a sufficient truncation
HORIZON_STEP = 8

#: Default band used for conjugated leads, which are 1 up to rounding
RESCALED_K = 1 + 1e-9


@dataclass(frozen=True)
class MonicConjugacy:
    """Scale factors of a monic conjugacy, truncated at :attr:`horizon`.

    ``alphas[k]`` is the scale at time ``k`` for ``0 <= k <= horizon``.
    """

    alphas: Tuple[complex, ...]
    horizon: int
    #: Bound on ``|log alpha_k(truncated) - log alpha_k|`` for ``k <= m_max``
    tail_bound: float
    m_max: int
    #: Direction of the logarithm branch cut, in degrees
    cut: float = 180.0
    #: ``log a_n`` on the chosen branch, index ``n - 1``
    lead_logs: Tuple[complex, ...] = ()
    degrees: Tuple[int, ...] = ()

    @property
    def is_identity(self) -> bool:
        return all(a == 1 for a in self.alphas)

    def chi(self, k: int, z):
        """Apply ``chi_k``."""
        return self._alpha(k) * z

    def chi_inverse(self, k: int, z):
        return z / self._alpha(k)

    def root(self, k: int, n: int) -> complex:
        """The root ``a_n ** (1 / D_{k,n})`` used in ``alpha_k``."""
        if not 0 <= k < n <= self.horizon:
            raise ValueError(f"Need 0 <= k < n <= {self.horizon}")
        if self.is_identity:
            return 1 + 0j
        ledger = DegreeLedger.of(self.degrees[k:n])
        return cmath.exp(self.lead_logs[n - 1] * ledger.invD)

    def _alpha(self, k: int) -> complex:
        if not 0 <= k < len(self.alphas):
            raise IndexBeyondHorizon(k, len(self.alphas) - 1)
        return self.alphas[k]


def _clearance(cut: float, args: Tuple[float, ...]) -> float:
    """Smallest angular distance (degrees) from *cut* to any of *args*."""
    best = 180.0
    for a in args:
        diff = abs((a - cut + 180.0) % 360.0 - 180.0)
        best = min(best, diff)
    return best


def choose_cut(leads, horizon: int) -> float:
    """Pick a ray from 0 avoided by every leading coefficient.

    The negative real axis is preferred; otherwise the one-degree candidate
    with the largest clearance is used.

    :raises BranchObstruction:
        If no candidate keeps :data:`MIN_CLEARANCE` from all leads.
    """
    args = tuple(math.degrees(cmath.phase(a)) for a in leads)
    if _clearance(180.0, args) >= MIN_CLEARANCE:
        return 180.0
    best_cut, best = 180.0, -1.0
    for cut in range(360):
        clearance = _clearance(float(cut), args)
        if clearance > best:
            best_cut, best = float(cut), clearance
    if best < MIN_CLEARANCE:
        raise BranchObstruction(horizon, best)
    return best_cut


def _branch_log(a: complex, cut: float) -> complex:
    """``log a`` with the argument in ``(cut - 360, cut)`` degrees."""
    phi = math.radians(cut)
    theta = phi - ((phi - cmath.phase(a)) % (2 * math.pi))
    return complex(math.log(abs(a)), theta)


def _tail_bound(bounds: Bounds, ledger: DegreeLedger) -> float:
    # sum_{n>H} 1/D_{k,n} <= 1/D_{k,H} since every degree is at least 2
    return (math.log(bounds.K) + 2 * math.pi) * ledger.invD


def monic_rescale(
    spec: SequenceSpec,
    m_max: int,
    horizon: Optional[int] = None,
    tol: float = 1e-12,
) -> MonicConjugacy:
    """Compute the monic conjugacy of *spec* for times ``0..m_max``.

    :param horizon:
        Index at which the infinite products are truncated. It is extended
        automatically until the tail bound at ``m_max`` is at most *tol*.
    :raises BranchObstruction:
        If the leading coefficients up to the horizon surround the origin.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    horizon = max(horizon or 0, m_max + 1)
    while True:
        ledger = DegreeLedger.of(spec.degrees(m_max, horizon))
        bound = _tail_bound(spec.bounds, ledger)
        if bound <= tol:
            break
        horizon += HORIZON_STEP
    polys = list(spec.polynomials(0, horizon))
    degrees = tuple(p.degree for p in polys)

    if all(abs(p.lead - 1) <= MONIC_TOL for p in polys):
        logger.debug("Sequence is monic up to %d, using identity conjugacy", horizon)
        return MonicConjugacy(
            (1 + 0j,) * (horizon + 1), horizon, 0.0, m_max, degrees=degrees)

    cut = choose_cut([p.lead for p in polys], horizon)
    logs = tuple(_branch_log(p.lead, cut) for p in polys)

    # log alpha_{k-1} = (log a_k + log alpha_k) / d_k, with alpha_H = 1
    log_alphas = [0j] * (horizon + 1)
    for k in range(horizon, 0, -1):
        log_alphas[k - 1] = (logs[k - 1] + log_alphas[k]) / degrees[k - 1]
    alphas = tuple(cmath.exp(v) for v in log_alphas)

    logger.info("Monic conjugacy up to %d: cut %.0f deg, tail bound %.3g",
                horizon, cut, bound)
    return MonicConjugacy(alphas, horizon, bound, m_max, cut, logs, degrees)


def conjugate_sequence(spec: SequenceSpec, conj: MonicConjugacy) -> SequenceSpec:
    """Return the conjugated sequence ``chi_k o P_k o chi_{k-1}^{-1}``.

    The result is defined for ``1 <= k <= conj.horizon`` and raises
    :class:`~iterjulia.exceptions.IndexBeyondHorizon` past it. Its bounds are
    ``K' = 1 + 1e-9`` and ``M' = K^2 M max(K, 1)^d``.
    """
    if conj.is_identity:
        return spec
    b = spec.bounds
    bounds = Bounds(b.d, RESCALED_K, b.K ** 2 * b.M * max(b.K, 1.0) ** b.d)
    return SequenceSpec(Rescaled(spec.rule, conj.alphas), bounds)
