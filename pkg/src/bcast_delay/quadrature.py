"""Adaptive Simpson quadrature with a doubling cutoff for decaying tails.

Every integrand in this package is a smooth product of CCDFs with an
(eventually) exponential tail, so the infinite upper limits are replaced by
a cutoff grown by doubling until the integrand is negligible, plus a final
tail estimate from the last observed log-slope.
"""

import math

from .exceptions import QuadratureError

TAIL_NEGLIGIBLE = 1e-13


def _simpson(fa, fm, fb, h):
    return h / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, m, b, fa, fm, fb, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    # the width floor stops integrable-cusp refinement once the panel's
    # possible contribution is below round-off
    if abs(delta) <= 15.0 * tol or (b - a) < 1e-13 * (abs(a) + 1.0):
        return left + right + delta / 15.0
    if depth <= 0:
        raise QuadratureError(f"adaptive Simpson exceeded max depth on [{a}, {b}]")
    half = 0.5 * tol
    return (
        _adaptive(f, a, lm, m, fa, flm, fm, left, half, depth - 1)
        + _adaptive(f, m, rm, b, fm, frm, fb, right, half, depth - 1)
    )


def adaptive_simpson(f, a, b, tol=1e-9, max_depth=48):
    """Integrate f over [a, b] to absolute tolerance tol."""
    if b <= a:
        return 0.0
    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _adaptive(f, a, m, b, fa, fm, fb, whole, tol, max_depth)


def integrate_decaying(f, a, tol=1e-9, first_span=None):
    """Integrate a non-negative decaying f over [a, infinity).

    The cutoff grows by doubling until f drops below TAIL_NEGLIGIBLE, each
    doubling segment is integrated adaptively, and a final exponential-tail
    estimate f(T)/slope (slope taken from the last observed log-decay) is
    added.
    """
    span = first_span if first_span is not None else max(1.0, abs(a))
    total = 0.0
    left = a
    right = a + span
    for _ in range(80):
        total += adaptive_simpson(f, left, right, tol=tol)
        if f(right) < TAIL_NEGLIGIBLE:
            break
        left = right
        span *= 2.0
        right = left + span
    else:
        raise QuadratureError("integrand did not decay below the cutoff threshold")
    f_end = f(right)
    if f_end > 0.0:
        probe = right - 0.05 * span
        f_probe = f(probe)
        if f_probe > f_end > 0.0:
            slope = (math.log(f_probe) - math.log(f_end)) / (right - probe)
            if slope > 0.0:
                total += f_end / slope
    return total
