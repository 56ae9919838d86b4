"""Sample-path experiments: replaying erasure realizations across blocklengths.

With an infinite field size every reception counts toward the current block,
so once the erasure pattern is fixed the delay of any blocking of a workload
is a deterministic replay.  Splitting a workload into blocks of c versus kc
packets never hurts the larger blocks (dominance holds path by path), while
for any non-multiple blocklength pair there is an explicit two-receiver
pattern on which the longer blocks finish later.
"""

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import NoCounterexample
from .sim import _chunk_rng

SEARCH_BUDGET = 100_000


@dataclass(frozen=True)
class ErasureTrace:
    """A fixed n x T matrix of receptions: bit (j, t) = 1 iff receiver j
    hears slot t (slots are 1-based in the API, stored 0-based)."""

    n: int
    horizon: int
    bits: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if bits.shape != (self.n, self.horizon):
            raise ValueError(f"bits shape {bits.shape} != ({self.n}, {self.horizon})")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)


def save_trace(trace, path):
    """Write the compact bitmap (header n, T then row-major bits) plus a
    JSON sidecar recording provenance."""
    payload = struct.pack("<II", trace.n, trace.horizon)
    payload += np.packbits(trace.bits.reshape(-1)).tobytes()
    with open(path, "wb") as fh:
        fh.write(payload)
    with open(str(path) + ".json", "w") as fh:
        json.dump({"n": trace.n, "T": trace.horizon, "provenance": trace.provenance},
                  fh, sort_keys=True)
        fh.write("\n")


def load_trace(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    n, horizon = struct.unpack_from("<II", raw, 0)
    flat = np.unpackbits(np.frombuffer(raw, dtype=np.uint8, offset=8))[: n * horizon]
    provenance = ""
    try:
        with open(str(path) + ".json") as fh:
            provenance = json.load(fh).get("provenance", "")
    except FileNotFoundError:
        pass
    return ErasureTrace(n=n, horizon=horizon, bits=flat.reshape(n, horizon),
                        provenance=provenance)


def _block_sizes(c, m):
    sizes = [c] * (m // c)
    if m % c:
        sizes.append(m % c)
    return sizes


def trace_delay(trace, c, m):
    """Slot at which a workload of m packets completes under blocklength c.

    Blocks are filled in order; a block is complete once every receiver has
    accumulated block-size receptions counted from the end of the previous
    block.  Returns None (incomplete) if the horizon runs out first.
    """
    if c < 1 or m < 1:
        raise ValueError("need c >= 1 and m >= 1")
    counts = trace.bits.cumsum(axis=1)  # receptions up to and including slot t
    t = 0
    for size in _block_sizes(c, m):
        block_end = 0
        for j in range(trace.n):
            base = counts[j, t - 1] if t > 0 else 0
            # first slot where receiver j holds base + size receptions
            pos = np.searchsorted(counts[j], base + size)
            if pos >= trace.horizon:
                return None
            block_end = max(block_end, pos + 1)
        t = block_end
    return t


def _bulk_trace_delay(bits, c, m):
    """Vectorized trace_delay over a stack of traces (R, n, T).

    Returns an int array with -1 marking incomplete traces.
    """
    reps, n, horizon = bits.shape
    counts = bits.cumsum(axis=2, dtype=np.int32)
    t = np.zeros(reps, dtype=np.int64)  # completion slot of previous block
    alive = np.ones(reps, dtype=bool)
    for size in _block_sizes(c, m):
        block_end = np.zeros(reps, dtype=np.int64)
        for j in range(n):
            prev = np.where(t > 0, counts[np.arange(reps), j, np.maximum(t - 1, 0)], 0)
            target = prev + size
            reached = counts[:, j, :] >= target[:, None]
            pos = reached.argmax(axis=1)
            ok = reached[np.arange(reps), pos]
            alive &= ok
            block_end = np.maximum(block_end, pos + 1)
        t = block_end
    return np.where(alive, t, -1)


def random_traces(ch, horizon, count, seed):
    """Stack of erasure realizations drawn from the channel (field size is
    irrelevant here; only the erasure pattern matters)."""
    q = np.asarray(ch.q)
    out = np.empty((count, ch.n, horizon), dtype=np.uint8)
    start = 0
    index = 0
    while start < count:
        size = min(4096, count - start)
        rng = _chunk_rng(seed, index)
        out[start:start + size] = (
            rng.random(size=(size, ch.n, horizon)) < q[None, :, None]
        ).astype(np.uint8)
        start += size
        index += 1
    return out


def adversarial_trace(c, cp, m, verify=True):
    """A two-receiver trace on which blocklength cp > c finishes later.

    Requires cp = k*c + l with k >= 1 and 1 <= l <= c-1 (for multiples of c
    no such trace exists) and m > cp.  The template succeeds for both
    receivers everywhere except c-l failures for receiver 1 right after
    slot k*c and c-l failures for receiver 2 one c-block later; if the
    template happens not to separate the delays for a given (c, cp, m), a
    bounded randomized search with failures concentrated near block
    boundaries takes over.
    """
    if c < 1 or cp <= c:
        raise ValueError(f"need cp > c >= 1, got c={c}, cp={cp}")
    k, l = divmod(cp, c)
    if l == 0:
        raise ValueError(f"cp={cp} is a multiple of c={c}; dominance always holds")
    if m <= cp:
        raise ValueError(f"need workload m > cp, got m={m}")
    horizon = m + 2 * (c - l) + c
    bits = np.ones((2, horizon), dtype=np.uint8)
    gap = c - l
    bits[0, k * c: k * c + gap] = 0            # slots kc+1 .. kc+(c-l)
    bits[1, k * c + c: k * c + c + gap] = 0    # one c-block later
    trace = ErasureTrace(n=2, horizon=horizon, bits=bits,
                         provenance=f"adversarial(c={c},cp={cp},m={m})")
    if not verify:
        return trace
    if _separates(trace, c, cp, m):
        return trace
    return _search_counterexample(c, cp, m, horizon)


def _separates(trace, c, cp, m):
    t_short = trace_delay(trace, c, m)
    t_long = trace_delay(trace, cp, m)
    return t_short is not None and t_long is not None and t_long > t_short


def _search_counterexample(c, cp, m, horizon):
    boundaries = set()
    for blk in (c, cp):
        for edge in range(blk, horizon + 1, blk):
            boundaries.update(range(max(0, edge - 1), min(horizon, edge + 1)))
    near = np.zeros(horizon, dtype=bool)
    near[list(boundaries)] = True
    p_fail = np.where(near, 0.45, 0.08)
    done = 0
    index = 0
    while done < SEARCH_BUDGET:
        size = min(2048, SEARCH_BUDGET - done)
        rng = _chunk_rng(0xADE5A1, index)
        stack = (rng.random(size=(size, 2, horizon)) >= p_fail[None, None, :]).astype(np.uint8)
        ts = _bulk_trace_delay(stack, c, m)
        tl = _bulk_trace_delay(stack, cp, m)
        good = (ts > 0) & (tl > 0) & (tl > ts)
        if good.any():
            i = int(np.argmax(good))
            return ErasureTrace(n=2, horizon=horizon, bits=stack[i],
                                provenance=f"adversarial-search(c={c},cp={cp},m={m})")
        done += size
        index += 1
    raise NoCounterexample(
        f"no trace with longer delay for cp={cp} vs c={c}, m={m} "
        f"within {SEARCH_BUDGET} samples"
    )


@dataclass(frozen=True)
class DominanceCount:
    longer_no_worse: int
    longer_worse: int
    incomplete: int


@dataclass(frozen=True)
class TraceComparison:
    """Pairwise blocklength comparison over a common set of random traces."""

    blocklengths: tuple
    traces: int
    horizon: int
    counts: dict  # (c_small, c_large) -> DominanceCount

    def dominance_fraction(self, c_small, c_large):
        dc = self.counts[(c_small, c_large)]
        decided = dc.longer_no_worse + dc.longer_worse
        return dc.longer_no_worse / decided if decided else float("nan")


def shared_trace_experiment(ch, m, blocklengths, traces, seed):
    """Replay the same random traces under several blocklengths.

    The horizon is twenty times the crude expected completion m/min(q).
    Incomplete replays are counted per pair, never silently dropped.
    """
    blocklengths = tuple(sorted(set(int(b) for b in blocklengths)))
    if any(b < 1 for b in blocklengths):
        raise ValueError("blocklengths must be >= 1")
    horizon = int(math.ceil(20.0 * m / min(ch.q)))
    stack = random_traces(ch, horizon, traces, seed)
    delays = {b: _bulk_trace_delay(stack, b, m) for b in blocklengths}
    counts = {}
    for i, small in enumerate(blocklengths):
        for large in blocklengths[i + 1:]:
            ds, dl = delays[small], delays[large]
            valid = (ds > 0) & (dl > 0)
            counts[(small, large)] = DominanceCount(
                longer_no_worse=int(((dl <= ds) & valid).sum()),
                longer_worse=int(((dl > ds) & valid).sum()),
                incomplete=int((~valid).sum()),
            )
    return TraceComparison(blocklengths=blocklengths, traces=traces,
                           horizon=horizon, counts=counts)
