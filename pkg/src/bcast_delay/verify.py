"""End-to-end invariant suite: oracle agreement, sandwiches, convergence.

Each check returns a CheckResult and is runnable in a reduced "quick" mode
(smaller grids and replication counts) or at full strength.  The CLI
`verify` subcommand and the acceptance tests both drive these functions, so
there is a single source of truth for what "correct" means.
"""

import math
import time
from dataclasses import dataclass
from itertools import product

import numpy as np

from .asymptotics import EvtContext, bn_sequence, scaling_ratio
from .bounds import (
    bounds_a1,
    bounds_a2,
    bounds_a3,
    delacal_lower,
    exponential_tail,
    per_packet_bounds,
    ross_upper_optimized,
)
from .channel import Channel, INFINITE
from .exceptions import NoCounterexample
from .rlc import (
    rlc_moment_series,
    rlc_recurrence_moments,
)
from .sim import pooled_z, simulate_geometric, simulate_gf
from .special import EULER_GAMMA, gamma_ccdf, phi, reg_inc_beta
from .traces import adversarial_trace, shared_trace_experiment, trace_delay
from .ut import MomentQuery, ut_max_moment_bounds, ut_max_moment_exact


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(name, failures, started, extra=""):
    detail = extra if not failures else "; ".join(failures[:4]) + (
        f" (+{len(failures) - 4} more)" if len(failures) > 4 else ""
    )
    return CheckResult(name=name, passed=not failures, detail=detail,
                       seconds=time.time() - started)


def _q_grid(n, quick):
    grids = [(0.6,) * n, (0.6, 0.75, 0.9, 0.5)[:n]]
    if not quick:
        grids.append((0.8,) * n)
    return grids


def check_tri_oracle(quick=False):
    """Composition series, beta/negbin series, and recurrence must agree."""
    started = time.time()
    failures = []
    ns = (1, 2) if quick else (1, 2, 3)
    cs = (1, 3) if quick else (1, 2, 3, 4)
    ds = (2, INFINITE) if quick else (2, 16, INFINITE)
    points = 0
    for n, c, d in product(ns, cs, ds):
        for q in _q_grid(n, quick):
            ch = Channel(n=n, q=q, d=d)
            table = rlc_recurrence_moments(ch, (c,) * n, 2)
            rec = table.moments((c,) * n)
            for r in (1, 2):
                comp_tol = 1e-4
                comp = rlc_moment_series(ch, c, r, tol=comp_tol, method="compositions")
                tol_ok = max(2 * comp_tol, 1e-6)
                if abs(comp.value - rec[r - 1]) > tol_ok:
                    failures.append(
                        f"compositions vs recurrence at n={n} c={c} d={d} q={q} r={r}: "
                        f"{comp.value} vs {rec[r - 1]}"
                    )
                if d is INFINITE:
                    for meth in ("negbin", "beta"):
                        s = rlc_moment_series(ch, c, r, tol=1e-8, method=meth)
                        if abs(s.value - rec[r - 1]) > 1e-6:
                            failures.append(
                                f"{meth} vs recurrence at n={n} c={c} q={q} r={r}: "
                                f"{s.value} vs {rec[r - 1]}"
                            )
                points += 1
    return _result("tri-oracle exactness", failures, started,
                   f"{points} grid points agree")


def check_bound_sandwiches(quick=False):
    """Every bound family must enclose the exact value; UT r=1 gap is one."""
    started = time.time()
    failures = []
    ns = (1, 2) if quick else (1, 2, 3, 4)
    cs = (1, 3) if quick else (1, 2, 3, 5)
    points = 0

    # uncoded transmission sandwich and the exact unit gap at r=1
    for n in ns:
        for q in _q_grid(n, quick):
            for r in ((1, 2) if quick else (1, 2, 3)):
                mq = MomentQuery(r=r, q=q)
                exact = ut_max_moment_exact(mq)
                bi = ut_max_moment_bounds(mq)
                if not bi.lower <= exact <= bi.upper:
                    failures.append(f"ut sandwich n={n} q={q} r={r}")
                if r == 1 and abs(bi.width - 1.0) > 1e-12:
                    failures.append(f"ut r=1 gap != 1 at n={n} q={q}: {bi.width}")
                points += 1

    for n, c in product(ns, cs):
        for r in (1, 2):
            for d in ((2,) if quick else (2, 16)):
                q = _q_grid(n, quick)[1]
                ch = Channel(n=n, q=q, d=d)
                rec = rlc_recurrence_moments(ch, (c,) * n, r).moments((c,) * n)[r - 1]
                bi = bounds_a1(ch, c, r, tol=1e-8)
                if not bi.lower <= rec <= bi.upper:
                    failures.append(f"a1 sandwich n={n} c={c} d={d} r={r}: "
                                    f"{bi.lower} !<= {rec} !<= {bi.upper}")
                points += 1
            q = _q_grid(n, quick)[1]
            ch = Channel(n=n, q=q, d=INFINITE)
            rec = rlc_recurrence_moments(ch, (c,) * n, r).moments((c,) * n)[r - 1]
            bi = bounds_a2(q, c, r, tol=1e-8)
            if not bi.lower <= rec <= bi.upper:
                failures.append(f"a2 sandwich n={n} c={c} r={r}")
            qh = 0.55
            ch = Channel(n=n, q=(qh,) * n, d=INFINITE)
            rec = rlc_recurrence_moments(ch, (c,) * n, r).moments((c,) * n)[r - 1]
            bi = bounds_a3(qh, c, n, r)
            if not bi.lower <= rec <= bi.upper:
                failures.append(f"a3 sandwich n={n} c={c} r={r}: "
                                f"{bi.lower} !<= {rec} !<= {bi.upper}")
            points += 2
    return _result("bound sandwiches", failures, started, f"{points} sandwiches hold")


def check_mc_concordance(quick=False):
    """Simulation agrees with the recurrence, and the field simulation with
    the geometric one, including per-rank innovation frequencies."""
    started = time.time()
    failures = []
    reps = 20_000 if quick else 100_000
    n_configs = 6 if quick else 20
    rng = np.random.default_rng(20240817)
    for i in range(n_configs):
        n = int(rng.integers(1, 4))
        targets = tuple(int(v) for v in rng.integers(1, 5, size=n))
        q = tuple(float(v) for v in rng.uniform(0.25, 0.9, size=n))
        d = [2, 5, 16, INFINITE][int(rng.integers(0, 4))]
        ch = Channel(n=n, q=q, d=d)
        est = simulate_geometric(ch, targets, r=1, reps=reps, seed=1000 + i)
        rec = rlc_recurrence_moments(ch, targets, 1).mean(targets)
        z = abs(est.mean - rec) / est.std_error
        if z >= 4.0:
            failures.append(f"geo vs recurrence config {i} ({n},{targets},{d}): z={z:.2f}")

    gf_configs = [
        (2, 3, 2, (0.6, 0.75)),
        (3, 2, 2, (0.5, 0.8)),
        (5, 4, 1, (0.45,)),
    ]
    if not quick:
        gf_configs += [
            (2, 6, 2, (0.5, 0.7)),
            (13, 3, 3, (0.4, 0.6, 0.85)),
            (257, 2, 2, (0.55, 0.7)),
        ]
    gf_reps = 20_000 if quick else 100_000
    for d, c, n, q in gf_configs:
        ch = Channel(n=n, q=q, d=d)
        est_gf, innov = simulate_gf(ch, c, reps=gf_reps, seed=77)
        est_geo = simulate_geometric(ch, (c,) * n, r=1, reps=gf_reps, seed=78)
        z = pooled_z(est_gf, est_geo)
        if z >= 4.0:
            failures.append(f"gf vs geo at d={d} c={c} n={n}: z={z:.2f}")
        for k in range(c):
            if innov.receptions[k] < 1000:
                continue
            dev = abs(innov.frequency(k) - innov.expected(k))
            if dev >= 4.0 * innov.std_error(k):
                failures.append(
                    f"innovation freq at d={d} c={c} rank {k}: "
                    f"{innov.frequency(k):.4f} vs {innov.expected(k):.4f}"
                )
    return _result("Monte Carlo concordance", failures, started,
                   f"{n_configs} geometric configs, {len(gf_configs)} field configs, "
                   f"{reps} reps")


def check_per_packet_monotonicity(quick=False):
    """Expected delay per packet strictly decreases with the blocklength,
    and one big block beats every partition of the workload."""
    started = time.time()
    failures = []
    cmax = 6 if quick else 10
    ns = (1, 2) if quick else (1, 2, 3)
    ds = (2, INFINITE) if quick else (2, 4, 16, INFINITE)
    for n, d in product(ns, ds):
        for q in ((0.35,) * n, (0.7,) * n, (0.4, 0.6, 0.8)[:n]):
            ch = Channel(n=n, q=q, d=d)
            # a single receiver at infinite field size has per-packet delay
            # exactly 1/q for every c: equality, not strict decrease
            degenerate = n == 1 and d is INFINITE
            prev = None
            for c in range(1, cmax + 1):
                val = rlc_recurrence_moments(ch, (c,) * n, 1).mean() / c
                if prev is not None:
                    if degenerate:
                        if abs(val - prev) > 1e-9:
                            failures.append(f"single-receiver per-packet not constant at c={c}")
                    elif not val < prev:
                        failures.append(f"per-packet not decreasing at n={n} d={d} q={q} c={c}")
                prev = val

    # block-partition optimality for workload M = 6
    for d in (2, INFINITE):
        ch = Channel(n=2, q=(0.5, 0.7), d=d)
        block_mean = {
            c: rlc_recurrence_moments(ch, (c, c), 1).mean() for c in range(1, 7)
        }
        whole = block_mean[6]
        for comp in _compositions_of(6):
            total = sum(block_mean[c] for c in comp)
            if total < whole - 1e-9:
                failures.append(f"partition {comp} beats one block at d={d}")
    return _result("per-packet monotonicity and block partition", failures, started,
                   f"c=1..{cmax} grids plus all 32 compositions of 6")


def _compositions_of(total):
    if total == 0:
        return [()]
    out = []
    for first in range(1, total + 1):
        for rest in _compositions_of(total - first):
            out.append((first,) + rest)
    return out


def check_sample_path(quick=False):
    """Multiples of the blocklength dominate on every path; non-multiples
    admit a verified counterexample trace."""
    started = time.time()
    failures = []
    traces = 2000 if quick else 10_000
    pairs = [(c, k * c) for c in range(1, 5) for k in (2, 3)]
    if quick:
        pairs = pairs[:4]
    ch = Channel(n=2, q=(0.5, 0.7), d=INFINITE)
    for c, big in pairs:
        m = min(30, 2 * big + 3)
        cmp = shared_trace_experiment(ch, m=m, blocklengths=(c, big),
                                      traces=traces, seed=5150 + c + big)
        dc = cmp.counts[(c, big)]
        if dc.longer_worse:
            failures.append(f"dominance violated for ({c},{big}): {dc.longer_worse} traces")
        if dc.incomplete:
            failures.append(f"incomplete traces for ({c},{big}): {dc.incomplete}")

    cgrid = range(2, 4) if quick else range(2, 6)
    for c in cgrid:
        for k in (1, 2):
            for l in range(1, c):
                cp = k * c + l
                m = cp + l
                try:
                    tr = adversarial_trace(c, cp, m)
                except NoCounterexample as exc:
                    failures.append(str(exc))
                    continue
                ts, tl = trace_delay(tr, c, m), trace_delay(tr, cp, m)
                if ts is None or tl is None or not tl > ts:
                    failures.append(f"counterexample replay failed for ({c},{cp},{m})")
    return _result("sample-path dominance and counterexamples", failures, started,
                   f"{traces} traces per multiple pair")


def check_per_packet_asymptotics(quick=False):
    """The per-packet sandwich encloses the exact value for the canonical
    5-receiver, q=1/12 sweep."""
    started = time.time()
    failures = []
    n, q = 5, 1.0 / 12.0
    cmax = 40 if quick else 200
    ch = Channel(n=n, q=(q,) * n, d=INFINITE)
    for c in range(1, cmax + 1):
        exact = rlc_moment_series(ch, c, 1, tol=1e-8).value / c
        bi = per_packet_bounds(n, c, q)
        if not bi.lower <= exact <= bi.upper:
            failures.append(f"per-packet sandwich fails at c={c}: "
                            f"{bi.lower} !<= {exact} !<= {bi.upper}")
        # construction identity on the upper side
        rebuilt = (1.0 + n / math.sqrt(2 * math.pi * c)) / phi(q) + 1.0
        if abs(bi.upper - rebuilt) > 1e-12:
            failures.append(f"upper bound identity broken at c={c}")
    return _result("per-packet asymptotics in c", failures, started,
                   f"c=1..{cmax} at n={n}, q=1/12")


def check_evt(quick=False):
    """Shifted means stay in the Gumbel window; moments scale as
    (log n / phi)^r."""
    started = time.time()
    failures = []
    c, q = 2, 0.5
    ns = (256, 1024, 4096) if quick else (256, 512, 1024, 2048, 4096)
    for n in ns:
        ch = Channel(n=n, q=(q,) * n, d=INFINITE)
        exact = rlc_moment_series(ch, c, 1, tol=1e-9).value
        shifted = exact - (bn_sequence(n, c) + EULER_GAMMA) / phi(q)
        if not -0.2 <= shifted <= c + 0.2:
            failures.append(f"shifted mean out of window at n={n}: {shifted:.4f}")
    r1 = scaling_ratio(EvtContext(n=10_000, c=1, q=q, r=1))
    if abs(r1 - 1.0) > 0.15:
        failures.append(f"scaling ratio r=1: {r1:.4f}")
    r2 = scaling_ratio(EvtContext(n=10_000, c=1, q=q, r=2))
    if abs(r2 - 1.0) > 0.25:
        failures.append(f"scaling ratio r=2: {r2:.4f}")
    r1c2 = scaling_ratio(EvtContext(n=10_000, c=2, q=q, r=1))
    if abs(r1c2 - 1.0) > 0.15:
        failures.append(f"scaling ratio c=2 r=1: {r1c2:.4f}")
    return _result("extreme-value behavior in n", failures, started,
                   f"shifted means within window; ratios {r1:.3f}/{r2:.3f}")


def check_appendix_f(quick=False):
    """The exponential example closes the loop: scheduled lower bound and
    1 + log n enclose the exact harmonic mean, with the right gap limit."""
    started = time.time()
    failures = []
    n_max = 10_000 if quick else 100_000
    h = 0.0
    tail_gap = None
    for n in range(1, n_max + 1):
        h += 1.0 / n
        if n < 3:
            continue
        log_n = math.log(n)
        upper = 1.0 + log_n
        t_n = 1.0 + log_n - math.log(log_n)
        lower = t_n - (t_n - 1.0) * (1.0 - math.exp(-t_n)) ** (n - 1)
        if not lower <= h <= upper:
            failures.append(f"exponential sandwich fails at n={n}: "
                            f"{lower} !<= {h} !<= {upper}")
            if len(failures) > 3:
                break
        if n == n_max:
            tail_gap = (upper - h) - (1.0 - EULER_GAMMA)
    if tail_gap is None or abs(tail_gap) >= 0.01:
        failures.append(f"gap limit off at n={n_max}: {tail_gap}")
    # generic quadrature route reproduces the closed form
    for n in (10, 100):
        b, s = ross_upper_optimized(exponential_tail(), n)
        if abs(b - (1.0 + math.log(n))) > 1e-6 or abs(s - math.log(n)) > 1e-9:
            failures.append(f"quadrature Ross at n={n}: {b}")
        lo = delacal_lower(exponential_tail(), n, 1.0 + math.log(n) - math.log(math.log(n)))
        if not lo <= sum(1.0 / j for j in range(1, n + 1)):
            failures.append(f"de la Cal at n={n} exceeds harmonic mean")
    return _result("exponential closed loop", failures, started,
                   f"n up to {n_max}; gap-(1-gamma) = {tail_gap:.2e}")


def _negbin_cdf(c, q, x):
    if x < c:
        return 0.0
    return reg_inc_beta(c, x - c + 1, q)


def check_beta_and_orderings(quick=False):
    """Beta-function shape properties and the CDF dominance sandwiches."""
    started = time.time()
    failures = []

    # increasing in the second argument
    bs = range(1, 11) if quick else range(1, 21)
    for a in range(1, 7):
        for x10 in range(1, 10):
            x = x10 / 10.0
            prev = None
            for b in bs:
                v = reg_inc_beta(a, b, x)
                if prev is not None and not v > prev:
                    failures.append(f"I_x not increasing in b at a={a} x={x} b={b}")
                prev = v

    # log-concavity in x via discrete second differences
    npts = 80 if quick else 200
    amax = 6 if quick else 10
    xs = [(i + 1) / (npts + 1) for i in range(npts)]
    for a in range(1, amax + 1):
        for b in range(1, amax + 1):
            logs = [math.log(reg_inc_beta(a, b, x)) for x in xs]
            for i in range(1, npts - 1):
                second = logs[i + 1] - 2 * logs[i] + logs[i - 1]
                if second > 1e-9:
                    failures.append(f"log I not concave at a={a} b={b} x={xs[i]:.3f}")
                    break

    # stochastic-ordering sandwiches on the CDFs
    params = [(3, 1.0 / 3.0), (6, 2.0 / 3.0)]
    if not quick:
        params += [(1, 0.5), (4, 0.8)]
    for c, q in params:
        rate = phi(q)
        ymax = 4.0 * c / q + 8.0
        y = 0.05
        while y < ymax:
            f_y = _negbin_cdf(c, q, math.floor(y))
            f_gamma = 1.0 - gamma_ccdf(c, rate * y)
            f_gamma_shift = (1.0 - gamma_ccdf(c, rate * (y - c))) if y >= c else 0.0
            if f_gamma < f_y - 1e-12 or f_y < f_gamma_shift - 1e-12:
                failures.append(f"gamma ordering fails at c={c} q={q:.3f} y={y:.2f}")
                break
            f_w = reg_inc_beta(c, y - c + 1.0, q) if y > c else (1.0 if y == c else 0.0)
            f_w1 = reg_inc_beta(c, y - c, q) if y > c + 1 else 0.0
            if f_w < f_y - 1e-12 or f_y < f_w1 - 1e-12:
                failures.append(f"beta-variable ordering fails at c={c} q={q:.3f} y={y:.2f}")
                break
            y += 0.05

    # state-dependent case: hypo-exponential analog vs exact convolution
    for q, d, c in ((0.5, 2, 3), (0.7, 4, 2)):
        ch = Channel(n=1, q=(q,), d=d)
        from .channel import success_row

        row = success_row(ch, 1, c)
        rates = [phi(p) for p in row]
        pmf = [1.0]
        for p in row:
            # convolve with Geo(p) pmf up to a generous horizon
            horizon = 200
            new = [0.0] * (horizon + 1)
            for prior, mass in enumerate(pmf):
                if mass == 0.0:
                    continue
                geo = p
                for step in range(1, horizon + 1 - prior):
                    new[prior + step] += mass * geo
                    geo *= 1.0 - p
            pmf = new
        cdf = np.cumsum(pmf)
        from .special import hypoexp_cdf

        for y in np.arange(0.5, 60.0, 0.5):
            f_y = float(cdf[int(math.floor(y))])
            f_cont = hypoexp_cdf(rates, y)
            f_cont_shift = hypoexp_cdf(rates, y - c) if y >= c else 0.0
            if f_cont < f_y - 1e-9 or f_y < f_cont_shift - 1e-9:
                failures.append(f"hypoexp ordering fails at q={q} d={d} c={c} y={y}")
                break
    return _result("beta properties and stochastic orderings", failures, started,
                   "shape grids and CDF dominance grids clean")


ALL_CHECKS = [
    ("tri-oracle", check_tri_oracle),
    ("sandwiches", check_bound_sandwiches),
    ("monte-carlo", check_mc_concordance),
    ("monotonicity", check_per_packet_monotonicity),
    ("sample-path", check_sample_path),
    ("per-packet-asymptotics", check_per_packet_asymptotics),
    ("evt", check_evt),
    ("appendix-f", check_appendix_f),
    ("beta-orderings", check_beta_and_orderings),
]


def run_checks(quick=False, names=None):
    results = []
    for name, fn in ALL_CHECKS:
        if names and name not in names:
            continue
        results.append(fn(quick=quick))
    return results
