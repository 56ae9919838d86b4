"""Exact moments of the coded block-completion delay.

The block delay is max_j Y_j where Y_j is the number of slots receiver j
needs to collect its required count of innovative combinations; each Y_j is
a sum of independent geometrics whose success probabilities may depend on
the receiver state (finite field) or not (infinite field).

Two exact routes are provided and cross-checked against each other:

* an infinite CCDF series, truncated with an explicit a-posteriori tail
  bound, with three interchangeable per-receiver CDF evaluations
  ("compositions" for state-dependent successes, "negbin" and "beta" for
  state-independent ones); and

* a finite dynamic program over the lattice of remaining-success vectors,
  which also yields higher moments and the min-delay variant.
"""

import math
from dataclasses import dataclass
from itertools import combinations as _combinations
from itertools import product as _product

from .channel import Assumption, classify, is_infinite, success_row
from .exceptions import GuardError, NonConvergence
from .special import reg_inc_beta

MAX_SERIES_ORDER = 4
MAX_COMPOSITION_TOTAL = 60   # |A_t| = C(t-1, c-1) enumeration guard
MAX_LATTICE_STATES = 2_000_000
MAX_RECURRENCE_RECEIVERS = 16
CONSECUTIVE_SMALL = 16       # stopping rule: this many consecutive small terms


def _validate_targets(c0, n):
    targets = tuple(int(v) for v in c0)
    if len(targets) != n:
        raise ValueError(f"expected {n} targets, got {len(targets)}")
    if any(v < 0 for v in targets):
        raise ValueError(f"targets must be non-negative, got {targets}")
    return targets


@dataclass(frozen=True)
class SeriesResult:
    """Truncated-series value with the number of terms and a tail bound."""

    value: float
    terms_used: int
    tail_bound: float


class MomentTable:
    """Moments E[Y^1..Y^r] of the block delay at every lattice state.

    States are remaining-success vectors c <= c0 componentwise; the
    all-zeros state is absorbing with all moments zero.
    """

    def __init__(self, c0, r, values):
        self.c0 = c0
        self.r = r
        self._dims = tuple(v + 1 for v in c0)
        self._values = values  # list of r dense arrays

    def _index(self, state):
        idx = 0
        for v, dim in zip(state, self._dims):
            if not 0 <= v < dim:
                raise KeyError(f"state {state} outside lattice for targets {self.c0}")
            idx = idx * dim + v
        return idx

    def moments(self, state):
        """Tuple (E[Y], E[Y^2], ..., E[Y^r]) at the given state."""
        i = self._index(tuple(int(v) for v in state))
        return tuple(vals[i] for vals in self._values)

    def mean(self, state=None):
        if state is None:
            state = self.c0
        return self.moments(state)[0]


# ---------------------------------------------------------------------------
# Per-receiver CDF tracks for the series.  Each track exposes cdf() for the
# current integer argument and advance() moving the argument up by one.
# ---------------------------------------------------------------------------


class _BetaTrack:
    """F(x) = P(Bin(x, q) >= c), advanced by the binomial-tail recurrence."""

    def __init__(self, c, q):
        if c * abs(math.log(q)) > 700.0:
            raise GuardError(
                f"blocklength {c} with success probability {q} underflows "
                "direct probability arithmetic"
            )
        self.c = c
        self.q = q
        self.x = c
        self._f = q ** c
        # probability of exactly c-1 successes in x trials
        self._p = c * q ** (c - 1) * (1.0 - q)

    def cdf(self):
        return self._f

    def advance(self):
        x = self.x
        self._f += self.q * self._p
        self._p *= (1.0 - self.q) * (x + 1) / (x - self.c + 2)
        self.x = x + 1


class _NegBinTrack:
    """F(x) = sum_{t=c..x} C(t-1, c-1) (1-q)^(t-c) q^c, advanced termwise."""

    def __init__(self, c, q):
        if c * abs(math.log(q)) > 700.0:
            raise GuardError(
                f"blocklength {c} with success probability {q} underflows "
                "direct probability arithmetic"
            )
        self.c = c
        self.q = q
        self.x = c
        self._term = q ** c   # pmf at t = c
        self._f = self._term

    def cdf(self):
        return self._f

    def advance(self):
        t = self.x
        # C(t, c-1)/C(t-1, c-1) = t/(t-c+1)
        self._term *= (1.0 - self.q) * t / (t - self.c + 1)
        self._f += self._term
        self.x = t + 1


class _CompositionTrack:
    """CDF from explicit enumeration of success-gap compositions.

    For a state-dependent success row (q_1,...,q_c), P(Y <= x) sums, over
    t = c..x and over every c-vector of positive gaps summing to t, the
    probability prod_k (1-q_k)^(gap_k - 1) q_k.  The enumeration is capped
    at t = MAX_COMPOSITION_TOTAL.
    """

    _tables = {}  # (c, tmax) -> (exponent matrix, total-vector)

    def __init__(self, row, tmax=MAX_COMPOSITION_TOTAL):
        self.row = tuple(row)
        self.c = len(self.row)
        self.tmax = tmax
        self.x = self.c
        self._cdf_by_x = self._build()

    @classmethod
    def _composition_table(cls, c, tmax):
        key = (c, tmax)
        if key not in cls._tables:
            import numpy as np

            gaps = []
            totals = []
            for t in range(c, tmax + 1):
                # cuts choose positions of the c-1 internal boundaries
                for cuts in _combinations(range(1, t), c - 1):
                    prev = 0
                    gap = []
                    for pos in cuts:
                        gap.append(pos - prev)
                        prev = pos
                    gap.append(t - prev)
                    gaps.append(gap)
                    totals.append(t)
            cls._tables[key] = (
                np.asarray(gaps, dtype=np.int64),
                np.asarray(totals, dtype=np.int64),
            )
        return cls._tables[key]

    def _build(self):
        import numpy as np

        exps, totals = self._composition_table(self.c, self.tmax)
        log_fail = np.log1p(-np.asarray(self.row))
        log_succ = float(np.sum(np.log(np.asarray(self.row))))
        logw = (exps - 1) @ log_fail + log_succ
        pmf_t = np.bincount(totals, weights=np.exp(logw), minlength=self.tmax + 1)
        return np.cumsum(pmf_t)

    def cdf(self):
        return float(self._cdf_by_x[self.x])

    def advance(self):
        if self.x + 1 > self.tmax:
            raise GuardError(
                f"composition enumeration capped at total {self.tmax}; "
                "series did not converge within the cap"
            )
        self.x += 1


class _PowerTrack:
    """Wraps a homogeneous track, raising its CDF to the n-th power."""

    def __init__(self, inner, n):
        self.inner = inner
        self.n = n
        self.x = inner.x

    def joint_cdf(self):
        f = self.inner.cdf()
        if f <= 0.0:
            return 0.0
        return math.exp(self.n * math.log(f))

    def single_ccdf(self):
        return 1.0 - self.inner.cdf()

    def advance(self):
        self.inner.advance()
        self.x = self.inner.x


class _ProductTracks:
    """Joint CDF as a product over per-receiver tracks."""

    def __init__(self, tracks):
        self.tracks = list(tracks)
        self.x = self.tracks[0].x

    def joint_cdf(self):
        p = 1.0
        for t in self.tracks:
            p *= t.cdf()
        return p

    def single_ccdf(self):
        return max(1.0 - t.cdf() for t in self.tracks)

    def advance(self):
        for t in self.tracks:
            t.advance()
        self.x = self.tracks[0].x


def _series_tracks(ch, c, method):
    cls = classify(ch)
    if method == "auto":
        method = "compositions" if cls is Assumption.A1 else "beta"
    if method == "compositions":
        rows = [success_row(ch, j, c) for j in range(1, ch.n + 1)]
        return _ProductTracks([_CompositionTrack(row) for row in rows]), method
    if cls is Assumption.A1:
        raise ValueError(
            f"series method {method!r} requires an infinite field size"
        )
    if method == "negbin":
        tracks = [_NegBinTrack(c, qj) for qj in ch.q]
        return _ProductTracks(tracks), method
    if method == "beta":
        if cls is Assumption.A3:
            return _PowerTrack(_BetaBasedTrack(c, ch.q[0]), ch.n), method
        return _ProductTracks([_BetaBasedTrack(c, qj) for qj in ch.q]), method
    raise ValueError(f"unknown series method {method!r}")


class _BetaBasedTrack(_BetaTrack):
    """Beta-path CDF; identical values to reg_inc_beta(c, x-c+1) at integers."""

    def check(self):
        # one-shot consistency hook used by tests
        return reg_inc_beta(self.c, self.x - self.c + 1, self.q)


def _per_receiver_stats(ch, c):
    """Mean and std-dev of each receiver's own completion time."""
    mus, sigmas = [], []
    for j in range(1, ch.n + 1):
        row = success_row(ch, j, c)
        mus.append(math.fsum(1.0 / p for p in row))
        sigmas.append(math.sqrt(math.fsum((1.0 - p) / p ** 2 for p in row)))
    return max(mus), max(sigmas)


def rlc_moment_series(ch, c, r, tol=1e-8, method="auto", max_terms=None):
    """Truncated-series value of E[(max_j Y_j)^r] for blocklength c.

    The m-indexed series c^r + sum_m (1 - prod_j F_j(floor(m^{1/r}))) is
    accumulated by grouping the m with a common floor, so each integer
    level x contributes ((x+1)^r - x^r) * (1 - prod_j F_j(x)).  Truncation
    stops after CONSECUTIVE_SMALL consecutive levels with summand below
    tol*(1-rho)/n once x clears the largest per-receiver mean plus ten
    standard deviations; the reported tail bound is
    n * ccdf * r * (x+1)^(r-1) / (1-rho) with rho the largest per-state
    failure probability.
    """
    if c < 1:
        raise ValueError(f"blocklength must be >= 1, got {c}")
    if not 1 <= r <= MAX_SERIES_ORDER:
        raise GuardError(f"series moment order must lie in 1..{MAX_SERIES_ORDER}, got {r}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    tracks, method = _series_tracks(ch, c, method)
    rho = max(
        1.0 - p for j in range(1, ch.n + 1) for p in success_row(ch, j, c)
    )
    mu_max, sigma_max = _per_receiver_stats(ch, c)
    base_threshold = tol * (1.0 - rho) / ch.n
    settle = mu_max + 10.0 * sigma_max

    value = float(c) ** r
    small_run = 0  # consecutive series terms (m-indexed) below threshold
    x = c
    cap = max_terms if max_terms is not None else 10_000_000
    levels = 0
    while True:
        summand = 1.0 - tracks.joint_cdf()
        block = (x + 1) ** r - x ** r  # how many m share this floor level
        value += float(block) * summand
        levels += 1
        # dividing by the remaining-block weight keeps the truncation error
        # near tol for every moment order, not just r = 1
        if summand * max(1, r * (x + 1) ** (r - 1)) < base_threshold:
            small_run += block
        else:
            small_run = 0
        if small_run >= CONSECUTIVE_SMALL and x > settle:
            break
        if levels >= cap:
            raise NonConvergence(
                f"series stopping rule unmet after {levels} levels (x={x})"
            )
        tracks.advance()
        x = tracks.x
    ccdf_last = tracks.single_ccdf()
    tail = ch.n * ccdf_last * r * float(x + 1) ** (r - 1) / (1.0 - rho)
    terms_used = (x + 1) ** r - c ** r
    return SeriesResult(value=value, terms_used=terms_used, tail_bound=tail)


# ---------------------------------------------------------------------------
# Lattice recurrence
# ---------------------------------------------------------------------------


def _check_lattice(ch, c0, r=1):
    targets = _validate_targets(c0, ch.n)
    if ch.n > MAX_RECURRENCE_RECEIVERS:
        raise GuardError(
            f"recurrence limited to {MAX_RECURRENCE_RECEIVERS} receivers, got {ch.n}"
        )
    states = math.prod(v + 1 for v in targets)
    if states > MAX_LATTICE_STATES:
        raise GuardError(f"lattice of {states} states exceeds {MAX_LATTICE_STATES}")
    if not 1 <= r <= MAX_SERIES_ORDER:
        raise GuardError(f"moment order must lie in 1..{MAX_SERIES_ORDER}, got {r}")
    return targets


def rlc_recurrence_moments(ch, c0, r=1):
    """Moments E[Y^1..Y^r] of the block delay by dynamic programming.

    States are remaining-success vectors; one slot either advances a
    non-empty subset S of the active receivers (probability p_S given by
    the product of per-receiver success/failure probabilities at their
    current states) or advances nobody.  The no-progress branch is folded
    in by division, and higher moments at a state are solved in increasing
    order so the binomial expansion of E[(1+Y')^s] only needs values
    already computed.
    """
    targets = _check_lattice(ch, c0, r)
    n = ch.n
    rows = [success_row(ch, j, targets[j - 1]) if targets[j - 1] > 0 else ()
            for j in range(1, n + 1)]
    dims = tuple(v + 1 for v in targets)
    strides = [0] * n
    acc = 1
    for j in reversed(range(n)):
        strides[j] = acc
        acc *= dims[j]
    total = acc
    values = [[0.0] * total for _ in range(r)]
    binom = [[math.comb(s, u) for u in range(s + 1)] for s in range(r + 1)]

    for state in _product(*(range(d) for d in dims)):
        if all(v == 0 for v in state):
            continue
        idx = sum(v * strides[j] for j, v in enumerate(state))
        active = [j for j, v in enumerate(state) if v > 0]
        probs = [rows[j][targets[j] - state[j]] for j in active]
        a = len(active)
        # moments of (1 + Y') for each non-empty successor, paired with p_S
        succ = []
        p_empty = 0.0
        for mask in range(1 << a):
            p = 1.0
            for b, j in enumerate(active):
                p *= probs[b] if (mask >> b) & 1 else 1.0 - probs[b]
            if mask == 0:
                p_empty = p
                continue
            nxt = idx
            for b, j in enumerate(active):
                if (mask >> b) & 1:
                    nxt -= strides[j]
            succ.append((p, nxt))
        denom = 1.0 - p_empty
        here = [0.0] * (r + 1)
        here[0] = 1.0
        for s in range(1, r + 1):
            acc_s = 0.0
            for p, nxt in succ:
                shifted = 0.0
                for u in range(s + 1):
                    mu = 1.0 if u == 0 else values[u - 1][nxt]
                    shifted += binom[s][u] * mu
                acc_s += p * shifted
            low = sum(binom[s][u] * here[u] for u in range(s))
            here[s] = (acc_s + p_empty * low) / denom
            values[s - 1][idx] = here[s]
    return MomentTable(targets, r, values)


def rlc_recurrence_min(ch, c0):
    """Expected slots until the first receiver completes its target.

    Same dynamic program, but any state with a zero component is absorbing
    (the race is over as soon as one receiver finishes).
    """
    targets = _check_lattice(ch, c0, 1)
    n = ch.n
    if min(targets) == 0:
        return 0.0
    rows = [success_row(ch, j, targets[j - 1]) for j in range(1, n + 1)]
    dims = tuple(v + 1 for v in targets)
    strides = [0] * n
    acc = 1
    for j in reversed(range(n)):
        strides[j] = acc
        acc *= dims[j]
    values = [0.0] * acc

    for state in _product(*(range(1, d) for d in dims)):
        # all components >= 1: every receiver is still racing
        idx = sum(v * strides[j] for j, v in enumerate(state))
        probs = [rows[j][targets[j] - state[j]] for j in range(n)]
        p_empty = math.prod(1.0 - p for p in probs)
        acc_v = 1.0
        for mask in range(1, 1 << n):
            p = 1.0
            nxt = idx
            for j in range(n):
                if (mask >> j) & 1:
                    p *= probs[j]
                    nxt -= strides[j]
                else:
                    p *= 1.0 - probs[j]
            acc_v += p * values[nxt]  # zero-containing states hold 0.0
        values[idx] = acc_v / (1.0 - p_empty)
    return values[sum(v * strides[j] for j, v in enumerate(targets))]


def per_packet_limit(ch):
    """Limit of the per-packet delay as the blocklength grows: 1/min_j q_j.

    Holds for any field size; the bottleneck receiver alone determines it.
    """
    return 1.0 / min(ch.q)
