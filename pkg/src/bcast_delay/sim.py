"""Monte Carlo estimation of the block delay.

Two simulators cross-validate the analysis and each other:

* `simulate_geometric` draws the per-state geometric slot counts directly
  from the success-probability matrix; and

* `simulate_gf` runs the coding process for real over a prime field,
  tracking each receiver's span by incremental Gaussian elimination, which
  validates the state-dependent innovation probabilities 1 - d**(k-c).

Randomness is counter-based (Philox) and keyed by (seed, fixed-size chunk
index), so results are reproducible bit for bit for a given (seed, reps)
regardless of how the chunks are scheduled.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import success_row
from .exceptions import GuardError, NonPrimeField

CHUNK = 4096
MAX_GF_BLOCKLENGTH = 16
MAX_FIELD_SIZE = 257


@dataclass(frozen=True)
class SimEstimate:
    """Empirical moment with its standard error and provenance."""

    moment_order: int
    mean: float
    std_error: float
    reps: int
    seed: int


@dataclass(frozen=True)
class InnovationStats:
    """Per-rank reception/innovation counts from the field simulation."""

    d: int
    c: int
    receptions: tuple
    innovations: tuple

    def frequency(self, k):
        return self.innovations[k] / self.receptions[k]

    def expected(self, k):
        """Innovation probability while holding k independent combinations."""
        return 1.0 - float(self.d) ** (k - self.c)

    def std_error(self, k):
        p = self.expected(k)
        return math.sqrt(p * (1.0 - p) / self.receptions[k])


def _chunk_rng(seed, chunk_index):
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(chunk_index)],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _chunks(reps):
    start = 0
    index = 0
    while start < reps:
        size = min(CHUNK, reps - start)
        yield index, size
        start += size
        index += 1


class _MomentAccumulator:
    def __init__(self):
        self.n = 0
        self.s1 = 0.0
        self.s2 = 0.0

    def add(self, values):
        self.n += values.size
        self.s1 += float(values.sum())
        self.s2 += float((values * values).sum())

    def estimate(self, r, reps, seed):
        mean = self.s1 / self.n
        if self.n > 1:
            var = max(0.0, (self.s2 - self.n * mean * mean) / (self.n - 1))
        else:
            var = 0.0
        return SimEstimate(moment_order=r, mean=mean,
                           std_error=math.sqrt(var / self.n),
                           reps=reps, seed=seed)


def simulate_geometric(ch, c0, r=1, reps=10000, seed=0, statistic="max"):
    """Estimate E[(statistic of the completion slots)^r] from the geometric model.

    Each receiver walks through its remaining states, spending an
    independent Geo(q[j,k]) number of slots in each; the max (or min) of
    the per-receiver totals is raised to the r-th power and averaged.
    """
    if reps < 1:
        raise ValueError(f"need reps >= 1, got {reps}")
    if statistic not in ("max", "min"):
        raise ValueError(f"statistic must be 'max' or 'min', got {statistic!r}")
    targets = tuple(int(v) for v in c0)
    if len(targets) != ch.n or any(v < 0 for v in targets):
        raise ValueError(f"bad target vector {c0} for n={ch.n}")
    rows = [np.asarray(success_row(ch, j, t), dtype=float) if t > 0 else None
            for j, t in zip(range(1, ch.n + 1), targets)]
    acc = _MomentAccumulator()
    for index, size in _chunks(reps):
        rng = _chunk_rng(seed, index)
        delays = np.zeros((size, ch.n), dtype=np.int64)
        for j, row in enumerate(rows):
            if row is None:
                continue
            draws = rng.geometric(p=row, size=(size, row.size))
            delays[:, j] = draws.sum(axis=1)
        totals = delays.max(axis=1) if statistic == "max" else delays.min(axis=1)
        acc.add(totals.astype(float) ** r)
    return acc.estimate(r, reps, seed)


def _is_prime(d):
    if d < 2:
        return False
    for p in range(2, int(math.isqrt(d)) + 1):
        if d % p == 0:
            return False
    return True


def _inverse_table(d):
    inv = np.zeros(d, dtype=np.int64)
    for a in range(1, d):
        inv[a] = pow(a, d - 2, d)
    return inv


def _reduce_vectors(vectors, bases, d):
    """Sweep-reduce each vector against its (reduced row echelon) basis.

    bases[i, p] is either the pivot row with leading one at column p or an
    all-zero row; pivot rows carry zeros at the other pivot columns, so a
    single left-to-right sweep leaves exactly the residual outside the span.
    """
    v = vectors % d
    for p in range(v.shape[-1]):
        coef = v[:, p].copy()
        v = (v - coef[:, None] * bases[:, p, :]) % d
    return v


def _insert_vectors(vectors, bases, d, inv_table):
    """Normalize residual vectors and splice them into the bases in place.

    Each vector must already be reduced and non-zero.  Returns the pivot
    column chosen per vector.
    """
    m = vectors.shape[0]
    pivots = (vectors != 0).argmax(axis=1)
    lead = vectors[np.arange(m), pivots]
    vecs = (vectors * inv_table[lead][:, None]) % d
    # clear the new pivot column from the existing rows
    factors = bases[np.arange(m)[:, None], np.arange(vectors.shape[1])[None, :], pivots[:, None]]
    bases -= factors[:, :, None] * vecs[:, None, :]
    bases %= d
    bases[np.arange(m), pivots, :] = vecs
    return pivots


def simulate_gf(ch, c, reps=10000, seed=0, r=1, shared_vector=False):
    """Run the random-combination process over GF(d) and time the decoding.

    Per slot a uniformly random coefficient vector is tested, for every
    receiver that hears the slot, against that receiver's current span by
    incremental Gaussian elimination.  By default each receiver draws its
    own independent vector, matching the analytical model in which the
    per-receiver innovation processes are independent; `shared_vector=True`
    instead broadcasts one vector per slot to all receivers (the physical
    system), which correlates receivers and shifts the max statistics.

    Returns (SimEstimate, InnovationStats); the latter holds, for each rank
    level k, how often a heard combination was innovative.
    """
    d = ch.d
    if not isinstance(d, int):
        raise NonPrimeField("field simulation needs a finite prime field size")
    if d > MAX_FIELD_SIZE or not _is_prime(d):
        raise NonPrimeField(f"field size must be a prime <= {MAX_FIELD_SIZE}, got {d}")
    if not 1 <= c <= MAX_GF_BLOCKLENGTH:
        raise GuardError(f"blocklength must lie in 1..{MAX_GF_BLOCKLENGTH}, got {c}")
    if reps < 1:
        raise ValueError(f"need reps >= 1, got {reps}")
    n = ch.n
    q = np.asarray(ch.q)
    inv_table = _inverse_table(d)
    qmin = float(q.min())
    slot_cap = int(200 + 200 * c / (qmin * (1.0 - 1.0 / d)))
    acc = _MomentAccumulator()
    receptions = np.zeros(c, dtype=np.int64)
    innovations = np.zeros(c, dtype=np.int64)

    for index, size in _chunks(reps):
        rng = _chunk_rng(seed, index)
        rank = np.zeros((size, n), dtype=np.int64)
        bases = np.zeros((size, n, c, c), dtype=np.int64)
        done_at = np.zeros((size, n), dtype=np.int64)
        t = 0
        while True:
            open_rx = rank < c
            if not open_rx.any():
                break
            t += 1
            if t > slot_cap:
                raise RuntimeError(f"simulation exceeded the slot cap {slot_cap}")
            heard = rng.random(size=(size, n)) < q[None, :]
            if shared_vector:
                vecs_all = rng.integers(0, d, size=(size, c), dtype=np.int64)
            else:
                vecs_all = rng.integers(0, d, size=(size, n, c), dtype=np.int64)
            tested = heard & open_rx
            rows, cols = np.nonzero(tested)
            if rows.size == 0:
                continue
            vecs = vecs_all[rows] if shared_vector else vecs_all[rows, cols]
            sub_bases = bases[rows, cols]
            residual = _reduce_vectors(vecs, sub_bases, d)
            innovative = residual.any(axis=1)
            levels = rank[rows, cols]
            np.add.at(receptions, levels, 1)
            np.add.at(innovations, levels[innovative], 1)
            if innovative.any():
                ir, ic = rows[innovative], cols[innovative]
                ib = sub_bases[innovative]
                _insert_vectors(residual[innovative], ib, d, inv_table)
                bases[ir, ic] = ib
                rank[ir, ic] += 1
                newly_done = rank[ir, ic] == c
                done_at[ir[newly_done], ic[newly_done]] = t
        delays = done_at.max(axis=1)
        acc.add(delays.astype(float) ** r)
    stats = InnovationStats(d=d, c=c,
                            receptions=tuple(int(v) for v in receptions),
                            innovations=tuple(int(v) for v in innovations))
    return acc.estimate(r, reps, seed), stats


def pooled_z(est_a, est_b):
    """Two-sample z statistic for comparing two SimEstimate means."""
    se = math.hypot(est_a.std_error, est_b.std_error)
    return abs(est_a.mean - est_b.mean) / se
