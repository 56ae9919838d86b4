"""Moment bounds for the block delay, from generic order-statistic bounds.

Two generic inequalities on E[max(Z_1..Z_n)] do all the work: a lower bound
t - (t - mean) F(t)^(n-1) valid for iid Z and any t >= mean (de la Cal and
Carcamo), and an upper bound s + sum_j int_s^inf CCDF_j, tightest where the
summed CCDFs equal one (Ross and Pekoz).  Applied to the continuous analogs
of the delay (hypo-exponential, Gamma, or the exact-at-integers Beta-CDF
variable) they sandwich every moment of the discrete delay.
"""

import math
from dataclasses import dataclass

from .channel import Assumption, classify, success_row
from .quadrature import integrate_decaying
from .special import SumExpCCDF, gamma_ccdf, gamma_ccdf_inv, phi, reg_inc_beta


@dataclass(frozen=True)
class BoundInterval:
    """A lower/upper pair with the method tag and tuning parameter used."""

    lower: float
    upper: float
    method: str
    param: object = None

    def __post_init__(self):
        if self.lower > self.upper + 1e-9 * max(1.0, abs(self.upper)):
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        if self.lower < -1e-12 or self.upper < 0.0:
            raise ValueError("bounds must be non-negative")

    @property
    def width(self):
        return self.upper - self.lower


@dataclass(frozen=True)
class TailFunction:
    """An evaluable CCDF t -> P(Z > t) together with the mean of Z."""

    ccdf: object
    mean: float

    def __call__(self, t):
        return self.ccdf(t)


def exponential_tail(rate=1.0):
    return TailFunction(ccdf=lambda t: math.exp(-rate * t) if t > 0 else 1.0,
                        mean=1.0 / rate)


def gamma_tail(c):
    """Tail of Gamma(c, 1), i.e. of a sum of c unit-rate exponentials."""
    return TailFunction(ccdf=lambda t: gamma_ccdf(c, t) if t > 0 else 1.0,
                        mean=float(c))


def delacal_lower(tail, n, t):
    """Lower bound t - (t - mean) F(t)^(n-1) on E[max of n iid copies]."""
    if t < tail.mean:
        raise ValueError(f"parameter t={t} below the mean {tail.mean}")
    cdf = 1.0 - tail(t)
    return t - (t - tail.mean) * cdf ** (n - 1)


def ross_upper(tail, n, s, tol=1e-9):
    """Upper bound s + n * int_s^inf CCDF for nonnegative identically
    distributed (not necessarily independent) copies.  s = 0 reduces to the
    union bound n * E[Z]."""
    if s < 0:
        raise ValueError(f"parameter s={s} must be non-negative")
    return s + n * integrate_decaying(tail, s, tol=tol)


def ross_optimal_s(tail, n, tol=1e-12):
    """Solve n * CCDF(s) = 1 by bisection (CCDF is non-increasing)."""
    if n * tail(0.0) <= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while n * tail(hi) > 1.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("bracket growth failed for the Ross optimum")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if n * tail(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ross_upper_optimized(tail, n, tol=1e-9):
    """Ross bound at the optimal s*; returns (bound, s_star)."""
    s_star = ross_optimal_s(tail, n)
    return ross_upper(tail, n, s_star, tol=tol), s_star


# ---------------------------------------------------------------------------
# Moment sandwiches for the coded block delay
# ---------------------------------------------------------------------------


def _max_moment_integral(joint_cdf_at, r, start=0.0, tol=1e-9):
    """int_start^inf (1 - prod_j F_j(y^(1/r))) dy for the continuous max."""
    def integrand(y):
        if y < 0.0:
            return 1.0
        arg = y ** (1.0 / r) if r > 1 else y
        return 1.0 - joint_cdf_at(arg)

    return integrate_decaying(integrand, start, tol=tol)


def bounds_a1(ch, c, r, tol=1e-9):
    """Hypo-exponential sandwich for state-dependent (finite-field) channels.

    Psi_p is the p-th moment of the max of the per-receiver hypo-exponential
    analogs, computed by quadrature; the discrete delay then satisfies
    Psi_r <= E[max^r] <= sum_s C(r,s) Psi_s c^(r-s).
    """
    if classify(ch) is not Assumption.A1:
        raise ValueError("bounds_a1 needs a finite field size; use bounds_a2/a3 otherwise")
    # SumExpCCDF falls back to uniformization where the partial-fraction
    # weights would drown the closed form in cancellation (large d, c)
    tails = [
        SumExpCCDF([phi(p) for p in success_row(ch, j, c)])
        for j in range(1, ch.n + 1)
    ]

    def joint_cdf(y):
        prod = 1.0
        for tail in tails:
            prod *= 1.0 - tail(y)
        return prod

    psi = [1.0]
    for p in range(1, r + 1):
        psi.append(_max_moment_integral(joint_cdf, p, start=0.0, tol=tol))
    lower = psi[r]
    upper = math.fsum(
        math.comb(r, s) * psi[s] * float(c) ** (r - s) for s in range(r + 1)
    )
    return BoundInterval(lower=lower, upper=upper, method="a1", param=None)


def bounds_a2(q, c, r, tol=1e-9):
    """Beta-CDF sandwich for infinite field size, heterogeneous receivers.

    The comparison variable has CDF I_{q_j}(c, w - c + 1) on [c, inf),
    matching the delay CDF at every integer, so the upper bound needs no
    blocklength inflation: lower <= E[max^r] <= sum_s C(r,s) * Psi~_s.
    """
    q = tuple(float(v) for v in q)

    def joint_cdf(w):
        prod = 1.0
        for qj in q:
            b = w - c + 1.0
            if b <= 0.0:
                return 0.0
            prod *= reg_inc_beta(c, b, qj)
        return prod

    psi = [1.0]
    for p in range(1, r + 1):
        start = float(c) ** p
        psi.append(start + _max_moment_integral(joint_cdf, p, start=start, tol=tol))
    lower = psi[r]
    upper = math.fsum(math.comb(r, s) * psi[s] for s in range(r + 1))
    return BoundInterval(lower=lower, upper=upper, method="a2", param=None)


def _gamma_mean_residual(c, s):
    """int_s^inf Q(c, t) dt = exp(-s) * sum_{i<c} (c - i) s^i / i!.

    Positive-term form of c*Q(c+1,s) - s*Q(c,s); stable for large s.
    """
    if s <= 0.0:
        return float(c)
    if s <= 500.0:
        term = math.exp(-s)
        total = c * term
        for i in range(1, c):
            term *= s / i
            total += (c - i) * term
        return total
    ls = math.log(s)
    logs = [math.log(c - i) - s + i * ls - math.lgamma(i + 1) for i in range(c)]
    hi = max(logs)
    if hi < -745.0:
        return 0.0
    return math.exp(hi) * math.fsum(math.exp(t - hi) for t in logs)


def _gamma_moment(c, r):
    # E[Gamma(c,1)^r] = (c)(c+1)...(c+r-1)
    return float(math.prod(range(c, c + r)))


def _ross_gamma_optimal(n, c, p):
    """Optimized Ross value for the p-th power of the Gamma max.

    At the optimum x* = Q^{-1}(c, 1/n) the bound collapses to
    Gamma(c+p)/Gamma(c) * (1 + n x*^(c+p-1) e^(-x*) sum_m x*^(-m)/Gamma(c+p-m)).
    """
    if n <= 1:
        return _gamma_moment(c, p), 0.0
    x_star = gamma_ccdf_inv(c, 1.0 / n)
    ratio = _gamma_moment(c, p)
    acc = 0.0
    for m in range(p):
        acc += math.exp(
            math.log(n) + (c + p - 1 - m) * math.log(x_star) - x_star
            - math.lgamma(c + p - m)
        )
    return ratio * (1.0 + acc), x_star ** p


def bounds_a3(q, c, n, r, t=None, optimize_t=False):
    """Closed-form Gamma sandwich for the homogeneous infinite-field case.

    No quadrature: the lower bound evaluates the de la Cal inequality on the
    Gamma analog at t (default: the Gamma r-th moment, optionally maximized
    by golden section), and the upper bound plugs the per-order optimized
    Ross values into the binomial expansion of the +c stochastic shift.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"success probability must lie in (0,1), got {q}")
    rate = phi(q)
    mean_r = _gamma_moment(c, r)

    def lower_at(tv):
        return (tv - (tv - mean_r) * (1.0 - gamma_ccdf(c, tv ** (1.0 / r))) ** (n - 1)) / rate ** r

    if t is None:
        t = mean_r
    if t < mean_r:
        raise ValueError(f"lower-bound parameter t={t} below the Gamma moment {mean_r}")
    t_used = t
    if optimize_t:
        t_used = _golden_max(lower_at, mean_r, _t_bracket(c, n, r))
    lower = lower_at(t_used)

    upper = float(c) ** r
    s_star = 0.0
    for p in range(1, r + 1):
        u_p, s_p = _ross_gamma_optimal(n, c, p)
        upper += math.comb(r, p) * u_p / rate ** p * float(c) ** (r - p)
        if p == r:
            s_star = s_p
    return BoundInterval(lower=lower, upper=upper, method="a3", param=(t_used, s_star))


def _t_bracket(c, n, r):
    # past this point the de la Cal bound is certainly declining
    x = gamma_ccdf_inv(c, 1.0 / (50.0 * max(n, 2)))
    return (x + 20.0) ** r


def _golden_max(f, lo, hi, iters=120):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = f(x1)
    xm = 0.5 * (a + b)
    return xm if f(xm) >= max(f1, f2) else (x1 if f1 >= f2 else x2)


def per_packet_bounds(n, c, q):
    """Sandwich for the expected delay per packet, tight as c grows.

    lower = l(n,c)/phi(q) with l = 1 + sqrt(log n / c) * (1 - (1 - Q(c, c +
    sqrt(c log n)))^(n-1)); upper = u(n,c)/phi(q) + 1 with u = 1 +
    n/sqrt(2 pi c).  Both l and u tend to one as c grows.
    """
    if n < 1 or c < 1:
        raise ValueError("need n >= 1 and c >= 1")
    rate = phi(q)
    log_n = math.log(n)
    t_sched = c + math.sqrt(c * log_n)
    l_tilde = 1.0 + math.sqrt(log_n / c) * (
        1.0 - (1.0 - gamma_ccdf(c, t_sched)) ** (n - 1)
    )
    u_tilde = 1.0 + n / math.sqrt(2.0 * math.pi * c)
    return BoundInterval(
        lower=l_tilde / rate,
        upper=u_tilde / rate + 1.0,
        method="per-packet",
        param=t_sched,
    )


def bounds_for_channel(ch, c, r, tol=1e-9):
    """The applicable sandwich for a channel: a1 for finite d, else a2."""
    if classify(ch) is Assumption.A1:
        return bounds_a1(ch, c, r, tol=tol)
    return bounds_a2(ch.q, c, r, tol=tol)
