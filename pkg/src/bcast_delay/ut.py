"""Delay of uncoded transmission: moments of the maximum of geometrics.

Under uncoded transmission each packet is rebroadcast until every receiver
holds it, so the per-packet delay is max(X_1,...,X_n) with independent
X_j ~ Geo(q_j).  Exact moments come from the min-max (inclusion-exclusion)
identity over receiver subsets, with the r-th geometric moment given by a
Stirling-number sum.  Bounds come from the exponential continuous analog,
and a truncated Fourier series gives an independent expression for the
homogeneous mean.
"""

import math
from dataclasses import dataclass
from itertools import combinations

from .bounds import BoundInterval
from .exceptions import GuardError
from .special import harmonic, phi, stirling2

MAX_MOMENT_ORDER = 10
MAX_RECEIVERS = 20  # 2**n subset enumeration bound


@dataclass(frozen=True)
class MomentQuery:
    """Moment order r and reception-probability vector for the max-delay ops."""

    r: int
    q: tuple

    def __post_init__(self):
        if not 1 <= self.r <= MAX_MOMENT_ORDER:
            raise GuardError(f"moment order must lie in 1..{MAX_MOMENT_ORDER}, got {self.r}")
        q = tuple(float(v) for v in self.q)
        object.__setattr__(self, "q", q)
        if not 1 <= len(q) <= MAX_RECEIVERS:
            raise GuardError(f"receiver count must lie in 1..{MAX_RECEIVERS}, got {len(q)}")
        for v in q:
            if not 0.0 < v < 1.0:
                raise ValueError(f"probabilities must lie in (0,1), got {v}")


def geo_moment(q, r):
    """r-th moment of Geo(q): (1/q) * sum_l {r brace l} (1/q - 1)^(l-1) l!."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"success probability must lie in (0,1), got {q}")
    if not 1 <= r <= MAX_MOMENT_ORDER:
        raise GuardError(f"moment order must lie in 1..{MAX_MOMENT_ORDER}, got {r}")
    odds = 1.0 / q - 1.0
    total = 0.0
    for l in range(1, r + 1):
        total += stirling2(r, l) * odds ** (l - 1) * math.factorial(l)
    return total / q


def _subset_sum(q, weight):
    """Inclusion-exclusion sum of weight(subset) over non-empty subsets."""
    n = len(q)
    total = 0.0
    for s in range(1, n + 1):
        sign = 1.0 if s % 2 == 1 else -1.0
        for idx in combinations(range(n), s):
            total += sign * weight([q[i] for i in idx])
    return total


def ut_max_moment_exact(mq):
    """Exact E[max(X_1..X_n)^r] via the min-max identity.

    The minimum over a subset A of independent geometrics is geometric with
    success probability 1 - prod_{j in A}(1-q_j), whose r-th moment is a
    Stirling sum.
    """
    def weight(sub):
        q_a = 1.0 - math.prod(1.0 - v for v in sub)
        return geo_moment(q_a, mq.r)

    return _subset_sum(mq.q, weight)


def _psi(q, r):
    # r-th moment of the max of the matched exponentials: for a subset A the
    # min is exponential with rate sum phi(q_j), whose r-th moment is r!/rate^r.
    if r == 0:
        return 1.0
    fact = math.factorial(r)

    def weight(sub_q):
        rate = math.fsum(phi(v) for v in sub_q)
        return fact / rate ** r

    return _subset_sum(q, weight)


def ut_max_moment_bounds(mq):
    """Exponential-analog sandwich for E[max^r]; the r=1 gap is exactly 1."""
    lower = _psi(mq.q, mq.r)
    upper = math.fsum(
        math.comb(mq.r, s) * _psi(mq.q, s) for s in range(0, mq.r + 1)
    )
    return BoundInterval(lower=lower, upper=upper, method="ut-exponential", param=None)


@dataclass(frozen=True)
class EisenbergMean:
    """Truncated Fourier-series value for the homogeneous UT mean."""

    value: float
    tail_bound: float
    terms: int


def ut_mean_eisenberg(q, n, terms=1000):
    """Homogeneous E[max(X_1..X_n)] as 1/2 + H_n/phi(q) minus a Fourier sum.

    The sum runs over conjugate pairs k = 1..terms (so the imaginary parts
    cancel identically) and the reported tail bound comes from comparing the
    k^-(n+1) term decay with an integral.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"success probability must lie in (0,1), got {q}")
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if terms < 1:
        raise ValueError(f"need at least one Fourier term, got {terms}")
    rate = phi(q)
    base = 0.5 + harmonic(n) / rate
    correction = 0.0
    for k in range(1, terms + 1):
        a = 2.0 * math.pi * k
        term = 1.0 / (a * 1j)
        for j in range(1, n + 1):
            term /= 1.0 + (a * 1j) / (j * rate)
        # k and -k are conjugate; their sum is twice the real part
        correction += 2.0 * term.real
    # |prod_j (1 + i a/(j rate))^-1| <= n! rate^n / a^n for a >= n*rate,
    # so the k-th pair is bounded by 2 n! rate^n / (2 pi k)^(n+1) and the
    # tail sum by the integral comparison below.
    tail = (
        2.0 * math.factorial(n) * rate ** n
        / (2.0 * math.pi) ** (n + 1) / (n * terms ** n)
    )
    return EisenbergMean(value=base - correction, tail_bound=tail, terms=terms)


def ut_mean_homogeneous_lower(q, n):
    """Harmonic-number lower bound H_n/phi(q) for the homogeneous mean."""
    return harmonic(n) / phi(q)
