"""Behavior of the block delay as the receiver count grows.

The Gamma analog of the homogeneous delay is attracted to the Gumbel
distribution under the location sequence

    b_n = log n - log Gamma(c) + (c-1) log log n,

which pins the growth of every moment to (log n / phi(q))^r, sandwiches
the shifted mean between the Gumbel constants, and supplies the parameter
schedules that make the generic order-statistic bounds asymptotically
tight.
"""

import math
from dataclasses import dataclass

from .channel import Channel, INFINITE
from .quadrature import integrate_decaying
from .rlc import rlc_moment_series
from .special import EULER_GAMMA, gamma_ccdf, phi

GUMBEL_TILT = -2.0  # fixed stand-in for the "send y to -infinity" limit


@dataclass(frozen=True)
class EvtContext:
    """Parameters of a homogeneous large-n moment question."""

    n: int
    c: int
    q: float
    r: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2, got {self.n}")
        if self.c < 1:
            raise ValueError(f"need c >= 1, got {self.c}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0,1), got {self.q}")
        if self.r not in (1, 2):
            raise ValueError(f"Gumbel constants only available for r in {{1,2}}, got {self.r}")


def bn_sequence(n, c):
    """Gumbel location sequence log n - log((c-1)!) + (c-1) log log n."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if c < 1 or int(c) != c:
        raise ValueError(f"blocklength must be a positive integer, got {c}")
    log_n = math.log(n)
    return log_n - math.log(math.factorial(int(c) - 1)) + (c - 1) * math.log(log_n)


@dataclass(frozen=True)
class EvtSandwich:
    lower: float
    upper: float
    finite_n_value: float


def evt_moment_sandwich(ctx, tol=1e-8):
    """Limit interval for the shifted first moment, plus its finite-n value.

    The limit of E[phi(q) Y_max - b_n] lies in [gamma, gamma + phi(q) c];
    finite_n_value evaluates phi(q) E[Y_max] - b_n exactly from the series.
    """
    if ctx.r != 1:
        raise ValueError("the moment sandwich is evaluated for r = 1 only")
    rate = phi(ctx.q)
    ch = Channel(n=ctx.n, q=(ctx.q,) * ctx.n, d=INFINITE)
    exact = rlc_moment_series(ch, ctx.c, 1, tol=tol).value
    return EvtSandwich(
        lower=EULER_GAMMA,
        upper=EULER_GAMMA + rate * ctx.c,
        finite_n_value=rate * exact - bn_sequence(ctx.n, ctx.c),
    )


def scaling_ratio(ctx, tol=1e-8):
    """E[Y_max^r] * (phi(q)/b_n)^r; tends to one as n grows."""
    ch = Channel(n=ctx.n, q=(ctx.q,) * ctx.n, d=INFINITE)
    exact = rlc_moment_series(ch, ctx.c, ctx.r, tol=tol).value
    return exact * (phi(ctx.q) / bn_sequence(ctx.n, ctx.c)) ** ctx.r


def m1_rbc_approx(n, c, q):
    """Leading terms of the classical mean-delay approximation.

    Evaluates lq(T) + 1/2 + gamma/phi(q) with
    lq(T) = (b_n + (c-1) log(q / ((1-q) phi(q)))) / phi(q); the bounded
    periodic correction term is omitted, so outputs carry an unquantified
    offset of that magnitude.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    rate = phi(q)
    lq = (bn_sequence(n, c) + (c - 1) * math.log(q / ((1.0 - q) * rate))) / rate
    return lq + 0.5 + EULER_GAMMA / rate


def tight_sequences(n, c, r, y_tilt=GUMBEL_TILT):
    """Parameter schedules (t_n, s_n) for the order-statistic bounds.

    t_n = (y_tilt + b_{n-1})^r feeds the lower bound, s_n = b_n^r the upper
    bound; both make the bounds asymptotically tight in n.
    """
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    t_n = (y_tilt + bn_sequence(n - 1, c)) ** r
    s_n = bn_sequence(n, c) ** r
    return t_n, s_n


def gamma_max_moment(n, c, r=1, tol=1e-9):
    """E[max of n iid Gamma(c,1)]^r moment by quadrature of the CCDF.

    The CDF power is taken in log space so n may be astronomically large.
    """
    def integrand(y):
        if y <= 0.0:
            return 1.0
        arg = y ** (1.0 / r) if r > 1 else y
        q_val = gamma_ccdf(c, arg)
        if q_val >= 1.0:
            return 1.0
        return -math.expm1(n * math.log1p(-q_val))

    return integrate_decaying(integrand, 0.0, tol=tol,
                              first_span=max(1.0, bn_sequence(max(n, 2), c)))
