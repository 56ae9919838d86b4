"""Command-line front end: sweeps, CSV/JSON emission, and the verify suite.

Every subcommand emits one record per sweep point with the fixed columns

    command,n,c,d,r,q_spec,method,value,lower,upper,std_error,param,seed

leaving fields empty where they do not apply (for series rows the `param`
column carries the reported truncation tail bound; for bound rows it is the
tuning parameter that was used).  Identical invocations with identical
seeds produce byte-identical output files.

Exit codes: 0 success, 1 usage error, 2 computation error, 3 verify-suite
failure.
"""

import argparse
import csv
import io
import json
import os
import sys

from . import verify as verify_mod
from .asymptotics import EvtContext, bn_sequence, m1_rbc_approx, scaling_ratio
from .bounds import bounds_a1, bounds_a2, bounds_a3, per_packet_bounds
from .channel import Channel, INFINITE, Assumption, classify, is_infinite
from .exceptions import (
    DegenerateRates,
    GuardError,
    NoCounterexample,
    NonConvergence,
    NonPrimeField,
    QuadratureError,
)
from .rlc import (
    MAX_LATTICE_STATES,
    MAX_RECURRENCE_RECEIVERS,
    rlc_moment_series,
    rlc_recurrence_moments,
)
from .sim import simulate_geometric, simulate_gf
from .special import EULER_GAMMA, phi
from .traces import adversarial_trace, load_trace, save_trace, shared_trace_experiment, trace_delay
from .ut import MomentQuery, ut_max_moment_bounds, ut_max_moment_exact, ut_mean_eisenberg

COLUMNS = ["command", "n", "c", "d", "r", "q_spec", "method", "value",
           "lower", "upper", "std_error", "param", "seed"]

_COMPUTE_ERRORS = (GuardError, NonConvergence, QuadratureError, DegenerateRates,
                   NonPrimeField, NoCounterexample, ValueError, RuntimeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_int_sweep(text, flag):
    """Accept '7', '2..9' (inclusive) or '2..4096:x2' (multiplicative)."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo_text, _, rest = part.partition("..")
            step = 1
            mult = None
            if ":" in rest:
                hi_text, _, step_text = rest.partition(":")
                if not step_text.startswith("x"):
                    raise UsageError(f"{flag}: bad range step {step_text!r} (use :xK)")
                mult = int(step_text[1:])
            else:
                hi_text = rest
            lo, hi = int(lo_text), int(hi_text)
            if mult is not None:
                if mult < 2:
                    raise UsageError(f"{flag}: multiplicative step must be >= 2")
                v = lo
                while v <= hi:
                    values.append(v)
                    v *= mult
            else:
                values.extend(range(lo, hi + 1, step))
        else:
            values.append(int(part))
    if not values:
        raise UsageError(f"{flag}: empty sweep")
    return values


def _parse_q(text, flag="--q"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"{flag}: {exc}") from exc
    for v in vals:
        if not 0.0 < v < 1.0:
            raise UsageError(f"{flag}: probabilities must lie strictly in (0,1), got {v}")
    return vals


def _parse_d(text):
    if text == "inf":
        return INFINITE
    try:
        d = int(text)
    except ValueError as exc:
        raise UsageError(f"--d: expected an integer or 'inf', got {text!r}") from exc
    if d < 2:
        raise UsageError(f"--d: field size must be >= 2, got {d}")
    return d


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", default=None, help="receiver count or sweep (a..b, a..b:xK)")
    common.add_argument("--c", default=None, help="blocklength or sweep")
    common.add_argument("--q", default=None, help="reception probability (scalar or comma list)")
    common.add_argument("--d", default=None, help="field size (integer >= 2 or 'inf')")
    common.add_argument("--r", default=None, help="moment order or sweep")
    common.add_argument("--reps", type=int, default=None, help="simulation replications")
    common.add_argument("--seed", type=int, default=None, help="master RNG seed")
    common.add_argument("--tol", type=float, default=None, help="series/quadrature tolerance")
    common.add_argument("--config", default=None, help="JSON channel config file")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default=None)
    common.add_argument("--gnuplot", action="store_true",
                        help="also write a ready-to-run gnuplot script next to --out")

    parser = _Parser(prog="bcast-delay",
                     description="Block-completion delay of broadcast over erasure channels")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ut", parents=[common], help="uncoded-transmission delay moments") \
        .add_argument("--terms", type=int, default=1000, help="Fourier terms for the homogeneous mean")
    sub.add_parser("rlc", parents=[common], help="coded block-delay moments (series + recurrence)")
    sub.add_parser("bounds", parents=[common], help="moment and per-packet bounds")
    sub.add_parser("asym", parents=[common], help="large-n scaling quantities")
    p = sub.add_parser("sim", parents=[common], help="Monte Carlo estimates")
    p.add_argument("--method", choices=("geometric", "gf", "both"), default="geometric")
    p = sub.add_parser("trace", parents=[common], help="sample-path experiments")
    p.add_argument("--m", type=int, default=None, help="workload in packets")
    p.add_argument("--cp", type=int, default=None, help="larger blocklength for --adversarial")
    p.add_argument("--adversarial", action="store_true",
                   help="construct a verified counterexample trace")
    p.add_argument("--replay", default=None, help="replay a stored trace file")
    p.add_argument("--trace-out", default=None, help="where to store a constructed trace")
    p = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    p.add_argument("--quick", action="store_true", help="reduced grids and replication counts")
    return parser


def parse_args(argv):
    """Parse a CLI invocation; flag values override --config file values."""
    args = _build_parser().parse_args(argv)
    cfg = vars(args)
    file_conf = {}
    if cfg.get("config"):
        try:
            with open(cfg["config"]) as fh:
                file_conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--config: {exc}") from exc

    def pick(flag, fallback=None):
        v = cfg.get(flag)
        if v is None:
            v = file_conf.get(flag, fallback)
        return v

    cfg["n_sweep"] = _parse_int_sweep(str(pick("n")), "--n") if pick("n") is not None else None
    cfg["c_sweep"] = _parse_int_sweep(str(pick("c")), "--c") if pick("c") is not None else None
    cfg["r_sweep"] = _parse_int_sweep(str(pick("r")), "--r") if pick("r") is not None else [1]
    q_raw = pick("q")
    if q_raw is not None and not isinstance(q_raw, str):
        q_raw = ",".join(repr(float(v)) for v in q_raw) if isinstance(q_raw, list) else repr(float(q_raw))
    cfg["q_spec"] = q_raw
    cfg["q_list"] = _parse_q(q_raw) if q_raw is not None else None
    d_raw = pick("d")
    cfg["d_val"] = _parse_d(str(d_raw)) if d_raw is not None else None
    cfg["reps"] = pick("reps", 10000)
    cfg["seed"] = pick("seed", 0)
    cfg["tol"] = pick("tol", 1e-8)
    if cfg["tol"] is not None and cfg["tol"] <= 0:
        raise UsageError(f"--tol must be positive, got {cfg['tol']}")
    cfg["fmt"] = pick("fmt", "csv")
    threads = os.environ.get("BCAST_DELAY_THREADS", "0")
    try:
        cfg["threads"] = int(threads)
    except ValueError as exc:
        raise UsageError(f"BCAST_DELAY_THREADS must be an integer, got {threads!r}") from exc
    if cfg["threads"] < 0:
        raise UsageError("BCAST_DELAY_THREADS must be >= 0")
    return cfg


def _channel(cfg, n):
    q = cfg["q_list"]
    if q is None:
        raise UsageError("--q is required for this command")
    if len(q) == 1:
        q = q * n
    if len(q) != n:
        raise UsageError(f"--q lists {len(q)} probabilities but n={n}")
    d = cfg["d_val"] if cfg["d_val"] is not None else INFINITE
    return Channel(n=n, q=tuple(q), d=d)


def _fmt_cell(v):
    if v is None or v == "":
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _row(cfg, **kw):
    base = {k: "" for k in COLUMNS}
    base["command"] = cfg["command"]
    base["q_spec"] = cfg.get("q_spec") or ""
    base["seed"] = cfg.get("seed")
    base.update(kw)
    return base


def _d_str(d):
    return "inf" if is_infinite(d) else str(d)


def _recurrence_feasible(n, c):
    return n <= MAX_RECURRENCE_RECEIVERS and (c + 1) ** n <= MAX_LATTICE_STATES


def _run_ut(cfg):
    rows = []
    for n in cfg["n_sweep"] or [len(cfg["q_list"] or [1])]:
        ch = _channel(cfg, n)
        for r in cfg["r_sweep"]:
            mq = MomentQuery(r=r, q=ch.q)
            rows.append(_row(cfg, n=n, r=r, method="exact",
                             value=ut_max_moment_exact(mq)))
            bi = ut_max_moment_bounds(mq)
            rows.append(_row(cfg, n=n, r=r, method="bounds",
                             lower=bi.lower, upper=bi.upper))
            if r == 1 and classify(ch) in (Assumption.A2, Assumption.A3) \
                    and len(set(ch.q)) == 1:
                e = ut_mean_eisenberg(ch.q[0], n, cfg.get("terms", 1000))
                rows.append(_row(cfg, n=n, r=1, method="fourier",
                                 value=e.value, param=e.tail_bound))
    return rows


def _run_rlc(cfg):
    rows = []
    for n in cfg["n_sweep"] or [len(cfg["q_list"] or [1])]:
        ch = _channel(cfg, n)
        for c in cfg["c_sweep"] or [1]:
            table = None
            if _recurrence_feasible(n, c):
                table = rlc_recurrence_moments(ch, (c,) * n, max(cfg["r_sweep"]))
            for r in cfg["r_sweep"]:
                s = rlc_moment_series(ch, c, r, tol=cfg["tol"])
                rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                 method="series", value=s.value, param=s.tail_bound))
                if table is not None:
                    rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                     method="recurrence",
                                     value=table.moments((c,) * n)[r - 1]))
    return rows


def _run_bounds(cfg):
    rows = []
    for n in cfg["n_sweep"] or [len(cfg["q_list"] or [1])]:
        ch = _channel(cfg, n)
        cls = classify(ch)
        for c in cfg["c_sweep"] or [1]:
            for r in cfg["r_sweep"]:
                exact = None
                if cls is not Assumption.A1:
                    exact = rlc_moment_series(ch, c, r, tol=cfg["tol"]).value
                elif _recurrence_feasible(n, c):
                    exact = rlc_recurrence_moments(ch, (c,) * n, r).moments((c,) * n)[r - 1]
                if cls is Assumption.A1:
                    bi = bounds_a1(ch, c, r)
                else:
                    bi = bounds_a2(ch.q, c, r)
                rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                 method=bi.method, value=exact,
                                 lower=bi.lower, upper=bi.upper))
                if cls is Assumption.A3:
                    bi3 = bounds_a3(ch.q[0], c, n, r)
                    rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                     method="a3", value=exact,
                                     lower=bi3.lower, upper=bi3.upper,
                                     param=repr(bi3.param)))
                    if r == 1:
                        pp = per_packet_bounds(n, c, ch.q[0])
                        rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=1,
                                         method="per-packet",
                                         value=None if exact is None else exact / c,
                                         lower=pp.lower, upper=pp.upper,
                                         param=pp.param))
    return rows


def _run_asym(cfg):
    rows = []
    for n in cfg["n_sweep"] or []:
        ch = _channel(cfg, n)
        if classify(ch) is not Assumption.A3:
            raise UsageError("asym needs a homogeneous channel with --d inf")
        q = ch.q[0]
        for c in cfg["c_sweep"] or [1]:
            for r in cfg["r_sweep"]:
                exact = rlc_moment_series(ch, c, r, tol=cfg["tol"]).value
                rows.append(_row(cfg, n=n, c=c, d="inf", r=r,
                                 method="exact", value=exact))
                if r in (1, 2):
                    ratio = scaling_ratio(EvtContext(n=n, c=c, q=q, r=r), tol=cfg["tol"])
                    rows.append(_row(cfg, n=n, c=c, d="inf", r=r,
                                     method="scaling-ratio", value=ratio))
                if r == 1:
                    b_n = bn_sequence(n, c)
                    rows.append(_row(cfg, n=n, c=c, d="inf", r=1,
                                     method="bn", value=b_n))
                    rows.append(_row(cfg, n=n, c=c, d="inf", r=1,
                                     method="evt-shifted",
                                     value=phi(q) * exact - b_n,
                                     lower=EULER_GAMMA,
                                     upper=EULER_GAMMA + phi(q) * c))
                    if n >= 3:
                        rows.append(_row(cfg, n=n, c=c, d="inf", r=1,
                                         method="mean-approx",
                                         value=m1_rbc_approx(n, c, q)))
    return rows


def _run_sim(cfg):
    rows = []
    for n in cfg["n_sweep"] or [len(cfg["q_list"] or [1])]:
        ch = _channel(cfg, n)
        for c in cfg["c_sweep"] or [1]:
            for r in cfg["r_sweep"]:
                if cfg["method"] in ("geometric", "both"):
                    est = simulate_geometric(ch, (c,) * n, r=r,
                                             reps=cfg["reps"], seed=cfg["seed"])
                    rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                     method="sim-geometric", value=est.mean,
                                     std_error=est.std_error))
                if cfg["method"] in ("gf", "both"):
                    est, innov = simulate_gf(ch, c, reps=cfg["reps"],
                                             seed=cfg["seed"], r=r)
                    rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                     method="sim-gf", value=est.mean,
                                     std_error=est.std_error))
                    for k in range(c):
                        if innov.receptions[k] == 0:
                            continue
                        rows.append(_row(cfg, n=n, c=c, d=_d_str(ch.d), r=r,
                                         method=f"innovation-k{k}",
                                         value=innov.frequency(k),
                                         param=innov.expected(k),
                                         std_error=innov.std_error(k)))
    return rows


def _run_trace(cfg):
    rows = []
    if cfg.get("replay"):
        tr = load_trace(cfg["replay"])
        c = (cfg["c_sweep"] or [1])[0]
        m = cfg.get("m") or c
        t = trace_delay(tr, c, m)
        rows.append(_row(cfg, n=tr.n, c=c, method="replay",
                         value=None if t is None else float(t),
                         param=tr.provenance))
        return rows
    if cfg.get("adversarial"):
        c = (cfg["c_sweep"] or [None])[0]
        cp, m = cfg.get("cp"), cfg.get("m")
        if not (c and cp and m):
            raise UsageError("--adversarial needs --c, --cp and --m")
        tr = adversarial_trace(c, cp, m)
        if cfg.get("trace_out"):
            save_trace(tr, cfg["trace_out"])
        rows.append(_row(cfg, n=2, c=c, method="trace-delay",
                         value=float(trace_delay(tr, c, m)), param=tr.provenance))
        rows.append(_row(cfg, n=2, c=cp, method="trace-delay",
                         value=float(trace_delay(tr, cp, m)), param=tr.provenance))
        return rows
    m = cfg.get("m")
    blocklengths = cfg["c_sweep"]
    if not (m and blocklengths and len(blocklengths) >= 2):
        raise UsageError("trace needs --m and a --c sweep of at least two blocklengths")
    n = (cfg["n_sweep"] or [len(cfg["q_list"] or [2])])[0]
    ch = _channel(cfg, n)
    cmp = shared_trace_experiment(ch, m=m, blocklengths=blocklengths,
                                  traces=cfg["reps"], seed=cfg["seed"])
    for (small, large), dc in sorted(cmp.counts.items()):
        rows.append(_row(cfg, n=n, c=f"{small}vs{large}", method="dominance",
                         value=cmp.dominance_fraction(small, large),
                         param=f"incomplete={dc.incomplete}"))
    return rows


def _write_rows(cfg, rows, stream):
    if cfg["fmt"] == "json":
        payload = [
            {k: (None if r[k] == "" else r[k]) for k in COLUMNS} for r in rows
        ]
        stream.write(json.dumps(payload, sort_keys=True, indent=1, default=repr))
        stream.write("\n")
        return
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_fmt_cell(r[k]) for k in COLUMNS])


def _gnuplot_script(cfg, rows, out_path):
    sweep_col = "c" if cfg.get("c_sweep") and len(cfg["c_sweep"]) > 1 else "n"
    idx = COLUMNS.index(sweep_col) + 1
    vidx = COLUMNS.index("value") + 1
    lidx = COLUMNS.index("lower") + 1
    uidx = COLUMNS.index("upper") + 1
    return "\n".join([
        "set datafile separator ','",
        f"set xlabel '{sweep_col}'",
        "set ylabel 'value'",
        "set key autotitle columnhead",
        f"plot '{out_path}' using {idx}:{vidx} with linespoints title 'value', \\",
        f"     '{out_path}' using {idx}:{lidx} with lines title 'lower', \\",
        f"     '{out_path}' using {idx}:{uidx} with lines title 'upper'",
        "",
    ])


def run(cfg):
    """Dispatch a parsed invocation; returns the process exit code."""
    if cfg["command"] == "verify":
        results = verify_mod.run_checks(quick=cfg.get("quick", False))
        ok = True
        for res in results:
            ok &= res.passed
            print(f"[{'PASS' if res.passed else 'FAIL'}] {res.name} "
                  f"({res.seconds:.1f}s) {res.detail}")
        return 0 if ok else 3

    runner = {
        "ut": _run_ut,
        "rlc": _run_rlc,
        "bounds": _run_bounds,
        "asym": _run_asym,
        "sim": _run_sim,
        "trace": _run_trace,
    }[cfg["command"]]
    rows = runner(cfg)
    buf = io.StringIO()
    _write_rows(cfg, rows, buf)
    text = buf.getvalue()
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
        if cfg.get("gnuplot") and cfg["fmt"] == "csv":
            with open(cfg["out"] + ".gp", "w") as fh:
                fh.write(_gnuplot_script(cfg, rows, cfg["out"]))
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except _COMPUTE_ERRORS as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
