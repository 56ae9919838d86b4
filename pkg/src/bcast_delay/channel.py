"""Broadcast erasure channel instances and their success-probability matrices.

A channel is (n, q, d): n receivers, per-receiver reception probabilities
q_j in (0,1), and the field size d used for the random linear combinations,
which is either a finite integer >= 2 or the distinguished value INFINITE.

The state-dependent success probability of receiver j while it still lacks
its k-th innovative combination out of a block of c is

    q[j,k] = (1 - d**(k-1-c)) * q_j      (finite d)
    q[j,k] = q_j                         (infinite d)

Receivers are indexed 1..n in the public API, matching the usual notation.
"""

import enum
import json
import math
from dataclasses import dataclass


class _InfiniteFieldSize:
    """Explicit infinite-field marker (not a sentinel number)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"


INFINITE = _InfiniteFieldSize()


class Assumption(enum.Enum):
    """Channel taxonomy, from most to least general.

    A1: finite field, heterogeneous receivers (state-dependent successes).
    A2: infinite field, heterogeneous receivers.
    A3: infinite field, homogeneous receivers.
    A3 implies A2 implies A1.
    """

    A1 = "A1"
    A2 = "A2"
    A3 = "A3"


def is_infinite(d):
    return d is INFINITE


@dataclass(frozen=True)
class Channel:
    n: int
    q: tuple
    d: object = INFINITE

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one receiver, got n={self.n}")
        q = tuple(float(v) for v in self.q)
        object.__setattr__(self, "q", q)
        if len(q) != self.n:
            raise ValueError(f"expected {self.n} reception probabilities, got {len(q)}")
        for v in q:
            if not 0.0 < v < 1.0:
                raise ValueError(f"reception probabilities must lie strictly in (0,1), got {v}")
        if not is_infinite(self.d):
            if int(self.d) != self.d or self.d < 2:
                raise ValueError(f"finite field size must be an integer >= 2, got {self.d}")
            object.__setattr__(self, "d", int(self.d))

    @classmethod
    def from_dict(cls, data):
        """Build from the JSON config schema {"n", "q", "d"}.

        "q" may be a scalar (broadcast to all n receivers) or a length-n
        list; "d" is an integer or the string "inf".
        """
        try:
            n = int(data["n"])
            q = data["q"]
            d = data["d"]
        except KeyError as exc:
            raise ValueError(f"channel config missing field {exc}") from exc
        if isinstance(q, (int, float)):
            q = [float(q)] * n
        d = INFINITE if d == "inf" else int(d)
        return cls(n=n, q=tuple(q), d=d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        return {"n": self.n, "q": list(self.q), "d": "inf" if is_infinite(self.d) else self.d}


@dataclass(frozen=True)
class SuccessMatrix:
    """n x c matrix of state-dependent success probabilities."""

    entries: tuple
    channel: Channel
    c: int

    def row(self, j):
        """Success probabilities (q[j,1], ..., q[j,c]) for receiver j (1-based)."""
        return self.entries[j - 1]


def success_row(ch, j, c):
    """Row j (1-based) of the success matrix for blocklength c."""
    qj = ch.q[j - 1]
    if is_infinite(ch.d):
        return (qj,) * c
    d = ch.d
    return tuple((1.0 - d ** float(k - 1 - c)) * qj for k in range(1, c + 1))


def success_matrix(ch, c):
    """Success-probability matrix for a block of c packets."""
    if c < 1:
        raise ValueError(f"blocklength must be >= 1, got {c}")
    entries = tuple(success_row(ch, j, c) for j in range(1, ch.n + 1))
    return SuccessMatrix(entries=entries, channel=ch, c=c)


def classify(ch):
    """A3 iff infinite field and homogeneous q, A2 iff infinite field, else A1."""
    if not is_infinite(ch.d):
        return Assumption.A1
    if all(v == ch.q[0] for v in ch.q):
        return Assumption.A3
    return Assumption.A2


def homogenize(ch, subset):
    """Replace q_j for j in `subset` (1-based indices) by their mean.

    Preserves the overall mean of q; averaging any receiver subset never
    increases the expected delay.
    """
    subset = set(subset)
    if not subset:
        raise ValueError("subset must be non-empty")
    if not subset <= set(range(1, ch.n + 1)):
        raise ValueError(f"subset {sorted(subset)} not within 1..{ch.n}")
    mean = math.fsum(ch.q[j - 1] for j in subset) / len(subset)
    q = tuple(mean if (j in subset) else ch.q[j - 1] for j in range(1, ch.n + 1))
    return Channel(n=ch.n, q=q, d=ch.d)
