"""Scalar special functions underpinning the delay formulas.

Shape parameters are integers throughout (the delay analysis never needs a
non-integer Gamma or Beta shape on the discrete side), so the incomplete
gamma/beta evaluations are exact finite sums rather than generic
approximation machinery.  Non-integer second Beta arguments, which arise
when a moment integral substitutes w**(1/r), go through a continued
fraction.

All functions here are pure and reentrant.
"""

import math
from dataclasses import dataclass

from .exceptions import DegenerateRates, GuardError

EULER_GAMMA = 0.5772156649015329

STIRLING_MAX_ORDER = 25

# Relative gap below which two hypo-exponential rates are treated as equal.
RATE_GAP = 1e-8


@dataclass(frozen=True)
class BetaParams:
    """Validated arguments for the regularized incomplete beta function."""

    a: int
    b: float
    x: float

    def __post_init__(self):
        if not isinstance(self.a, int) or self.a < 1:
            raise ValueError(f"first shape must be a positive integer, got {self.a}")
        if not self.b > 0:
            raise ValueError(f"second shape must be positive, got {self.b}")
        if not 0.0 < self.x < 1.0:
            raise ValueError(f"argument must lie in (0,1), got {self.x}")


@dataclass(frozen=True)
class RateVector:
    """Strictly positive, pairwise-distinct rates of a hypo-exponential sum."""

    rates: tuple

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise ValueError("rate vector must be non-empty")
        if any(r <= 0.0 for r in rates):
            raise ValueError("all rates must be strictly positive")
        _check_rate_gaps(rates)

    def __len__(self):
        return len(self.rates)


def _check_rate_gaps(rates):
    for i, a in enumerate(rates):
        for b in rates[i + 1:]:
            if abs(a - b) < RATE_GAP * max(a, b):
                raise DegenerateRates(
                    f"rates {a} and {b} closer than relative gap {RATE_GAP}"
                )


def stirling2(r, l):
    """Stirling number of the second kind: partitions of r items into l sets.

    Evaluated through the table recurrence
    ``a[l][r] = l*a[l][r-1] + a[l-1][r-1]`` with ``a[l][r] = 0`` for l > r
    and ``a[0][r] = 1`` iff r = 0.
    """
    if r < 0 or l < 0:
        raise ValueError("stirling2 arguments must be non-negative")
    if r > STIRLING_MAX_ORDER:
        raise GuardError(
            f"stirling2 order {r} exceeds the overflow guard {STIRLING_MAX_ORDER}"
        )
    if l > r:
        return 0
    if r == 0:
        return 1
    # row[j] holds {i brace j} for the current i
    row = [1] + [0] * r
    for i in range(1, r + 1):
        new = [0] * (r + 1)
        new[0] = 0
        for j in range(1, i + 1):
            new[j] = j * row[j] + row[j - 1]
        row = new
    return row[l]


def phi(q):
    """Rate of the exponential matched to a geometric: -log(1-q)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"success probability must lie in (0,1), got {q}")
    return -math.log1p(-q)


def harmonic(n):
    """n-th harmonic number by direct summation."""
    if n < 1:
        raise ValueError("harmonic number needs n >= 1")
    return math.fsum(1.0 / j for j in range(1, n + 1))


def _log_binom(m, k):
    return math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)


def _binomial_sum(lo, hi, m, x):
    """Sum of Bin(m, x) probabilities for r in [lo, hi], leading term in log
    space and the rest by ratio updates; log-sum-exp accumulation once m is
    large enough for the linear terms to underflow."""
    lx = math.log(x)
    l1x = math.log1p(-x)
    log_t = _log_binom(m, lo) + lo * lx + (m - lo) * l1x
    if m > 500:
        log_terms = [log_t]
        for r in range(lo, hi):
            log_t += math.log((m - r) / (r + 1)) + lx - l1x
            log_terms.append(log_t)
        peak = max(log_terms)
        if peak == -math.inf or peak < -745.0:
            return 0.0
        return math.exp(peak) * math.fsum(math.exp(t - peak) for t in log_terms)
    total = 0.0
    t = math.exp(log_t)
    for r in range(lo, hi + 1):
        total += t
        if r < hi:
            t *= (m - r) / (r + 1) * (x / (1.0 - x))
    return total


def _binomial_tail(l, m, x):
    """P(Bin(m, x) >= l), the integer-b regularized beta I_x(l, m-l+1).

    Always accumulates the minority side of the distribution: summing the
    bulk and relying on its ~1 total would drown a 1e-50 complement in the
    accumulated rounding of thousands of terms.
    """
    if l > m:
        return 0.0
    if l <= 0:
        return 1.0
    if l > m * x:
        return min(1.0, _binomial_sum(l, m, m, x))
    return min(1.0, max(0.0, 1.0 - _binomial_sum(0, l - 1, m, x)))


def _betacf(a, b, x):
    # Lentz continued fraction for the incomplete beta (Numerical Recipes form).
    MAXIT, EPS, FPMIN = 300, 1e-15, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def _reg_beta_cf(a, b, x):
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - math.exp(
        math.lgamma(a + b) - math.lgamma(b) - math.lgamma(a)
        + b * math.log1p(-x) + a * math.log(x)
    ) * _betacf(b, a, 1.0 - x) / b


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta I_x(a, b) for integer a >= 1, b > 0.

    Integer b is evaluated exactly as the binomial tail
    P(Bin(a+b-1, x) >= a); non-integer b goes through the continued
    fraction.  The result is clamped to [0, 1].
    """
    BetaParams(a=a, b=float(b), x=float(x))
    bf = float(b)
    if bf.is_integer():
        return _binomial_tail(a, a + int(bf) - 1, x)
    v = _reg_beta_cf(float(a), bf, float(x))
    return min(1.0, max(0.0, v))


def gamma_ccdf(c, s):
    """P(Gamma(c,1) > s) for integer shape c: exp(-s) * sum_{i<c} s^i/i!.

    Accumulated in log space once s is large enough that exp(-s) underflows
    the partial terms.
    """
    if c < 1 or int(c) != c:
        raise ValueError(f"shape must be a positive integer, got {c}")
    if s < 0:
        raise ValueError(f"argument must be non-negative, got {s}")
    c = int(c)
    if s == 0.0:
        return 1.0
    if s <= 500.0:
        term = math.exp(-s)
        total = term
        for i in range(1, c):
            term *= s / i
            total += term
        return min(1.0, total)
    ls = math.log(s)
    logs = [-s + i * ls - math.lgamma(i + 1) for i in range(c)]
    hi = max(logs)
    if hi < -745.0:  # exp underflows to 0 anyway
        return 0.0
    return min(1.0, math.exp(hi) * math.fsum(math.exp(t - hi) for t in logs))


def gamma_ccdf_inv(c, u, tol=1e-12):
    """Inverse of gamma_ccdf in its second argument, by bracketed bisection.

    Returns s >= 0 with gamma_ccdf(c, s) = u to absolute tolerance `tol` in s.
    """
    if not 0.0 < u < 1.0:
        raise ValueError(f"target must lie in (0,1), got {u}")
    lo, hi = 0.0, float(max(c, 1))
    while gamma_ccdf(c, hi) > u:
        hi *= 2.0
        if hi > 1e9:
            raise RuntimeError("bracket growth failed in gamma_ccdf_inv")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gamma_ccdf(c, mid) > u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hypoexp_cdf(rates, y):
    """CDF at y of a sum of independent exponentials with distinct rates.

    Uses the closed form F(y) = 1 - sum_k w_k exp(-rate_k y) with
    w_k = prod_{l != k} rate_l/(rate_l - rate_k).  Raises DegenerateRates
    when any pairwise relative gap falls below RATE_GAP; the caller is
    responsible for switching to the equal-rate Gamma form in that case.
    """
    if isinstance(rates, RateVector):
        rv = rates.rates
    else:
        rv = RateVector(tuple(rates)).rates
    if y < 0:
        raise ValueError(f"argument must be non-negative, got {y}")
    if y == 0.0:
        return 0.0
    acc = 0.0
    for k, lam_k in enumerate(rv):
        w = 1.0
        for l, lam_l in enumerate(rv):
            if l != k:
                w *= lam_l / (lam_l - lam_k)
        acc += w * math.exp(-lam_k * y)
    return min(1.0, max(0.0, 1.0 - acc))


def gumbel_moment(r):
    """r-th central-ish Gumbel limit constant: gamma for r=1, gamma^2+pi^2/6 for r=2."""
    if r == 1:
        return EULER_GAMMA
    if r == 2:
        return EULER_GAMMA ** 2 + math.pi ** 2 / 6.0
    raise ValueError(f"Gumbel moment constants are only provided for r in {{1,2}}, got {r}")


class SumExpCCDF:
    """P(sum of independent exponentials > y), stable for clustered rates.

    The partial-fraction closed form loses one digit per order of magnitude
    in its weights, which blow up as rates coalesce (weights ~ (rate/gap)^k),
    so once the estimated weight magnitude would push cancellation noise
    near the quadrature tail threshold the evaluator switches to
    uniformization: condition the phase chain on a Poisson number of
    uniformized jumps and sum the all-positive survival series.  Repeated
    rates are fine on that path.
    """

    _COND_LIMIT = 1e2

    def __init__(self, rates):
        rates = tuple(float(r) for r in rates)
        if not rates or any(r <= 0.0 for r in rates):
            raise ValueError("rates must be non-empty and strictly positive")
        self.rates = rates
        cond = 1.0
        for k, lam_k in enumerate(rates):
            w = 1.0
            for l, lam_l in enumerate(rates):
                if l != k:
                    gap = abs(lam_l - lam_k)
                    if gap == 0.0:
                        w = math.inf
                        break
                    w *= lam_l / gap
            cond = max(cond, w)
        self._weights = None
        self._survival = None
        if cond < self._COND_LIMIT:
            ws = []
            for k, lam_k in enumerate(rates):
                w = 1.0
                for l, lam_l in enumerate(rates):
                    if l != k:
                        w *= lam_l / (lam_l - lam_k)
                ws.append(w)
            self._weights = tuple(ws)
        else:
            self._theta = max(rates)
            self._jump = [r / self._theta for r in rates]
            self._state = [0.0] * len(rates)
            self._state[0] = 1.0
            self._survival = [1.0]

    def _extend(self, m_max):
        state = self._state
        jump = self._jump
        surv = self._survival
        while len(surv) <= m_max:
            new = [0.0] * len(state)
            for j, u in enumerate(state):
                stay = 1.0 - jump[j]
                new[j] += u * stay
                if j + 1 < len(state):
                    new[j + 1] += u * jump[j]
            self._state = state = new
            surv.append(math.fsum(state))

    def __call__(self, y):
        if y <= 0.0:
            return 1.0
        if self._weights is not None:
            acc = 0.0
            for w, lam in zip(self._weights, self.rates):
                acc += w * math.exp(-lam * y)
            return min(1.0, max(0.0, acc))
        ty = self._theta * y
        m_max = int(ty + 12.0 * math.sqrt(ty + 1.0) + 40.0)
        self._extend(m_max)
        surv = self._survival
        # Poisson weights from the mode outward so nothing underflows first
        m0 = min(m_max, int(ty))
        p0 = math.exp(-ty + m0 * math.log(ty) - math.lgamma(m0 + 1))
        total = p0 * surv[m0]
        p = p0
        for m in range(m0, 0, -1):
            p *= m / ty
            total += p * surv[m - 1]
            if p < 1e-20:
                break
        p = p0
        for m in range(m0, m_max):
            p *= ty / (m + 1)
            total += p * surv[m + 1]
            if p < 1e-20 and m > ty:
                break
        return min(1.0, max(0.0, total))
