"""
Independent reference implementations used only by the tests.

Nothing here imports the package's numerics. Complex arithmetic is done on
(re, im) float pairs with hand-written routines, penalties are summed
channel by channel, and the duplet search is a plain double loop.
"""

import math

C = 299_792_458.0


# -- complex numbers as (re, im) pairs ---------------------------------------

def c_sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def c_mul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def c_div(a, b):
    d = b[0] * b[0] + b[1] * b[1]
    return ((a[0] * b[0] + a[1] * b[1]) / d, (a[1] * b[0] - a[0] * b[1]) / d)


def c_exp(a):
    m = math.exp(a[0])
    return (m * math.cos(a[1]), m * math.sin(a[1]))


def gamma_oracle(q, br_gbps, det_ghz, f0_thz):
    f0 = f0_thz * 1e12
    v = f0 / (2.0 * q * br_gbps * 1e9)
    beta = 2.0 * q * det_ghz * 1e9 / f0
    a = 2.0 * math.pi * v
    z = (1.0, -beta)
    num = c_sub((1.0, 0.0), c_exp((-a * z[0], -a * z[1])))
    frac = c_div(num, c_mul(z, z))
    g = 1.0 / (1.0 + beta * beta) - frac[0] / a
    return min(1.0, max(0.0, g))


def detuning_ghz(k, spacing_nm, lam_nm=1550.0):
    return C * (k * spacing_nm * 1e-9) / (lam_nm * 1e-9) ** 2 * 1e-9


def filter_penalty_oracle(q, br, n, spacing_nm=0.37, victim=None, lam_nm=1550.0,
                          aggregation="power", weight=2.82, intrinsic_q=22500.0):
    """Victim-by-victim direct sum over every other channel of the comb."""
    victim = (n - 1) // 2 if victim is None else victim
    f0_thz = C / (lam_nm * 1e-9) * 1e-12
    total = 0.0
    for i in range(n):
        if i == victim:
            continue
        g = gamma_oracle(q, br, detuning_ghz(abs(i - victim), spacing_nm, lam_nm), f0_thz)
        total += math.sqrt(g) if aggregation == "amplitude" else g
    drop = 0.0
    if intrinsic_q is not None:
        if q >= intrinsic_q:
            return math.inf
        drop = -20.0 * math.log10(1.0 - q / intrinsic_q)
    x = weight * total
    if x >= 1.0:
        return math.inf
    return -10.0 * math.log10(1.0 - x) + drop


def er_penalty_oracle(er_db):
    r = 10.0 ** (er_db / 10.0)
    return -10.0 * math.log10((r - 1.0) / (r + 1.0))


def er_oracle(q, anchors):
    """Piecewise-linear ER(Q), clamped at both ends."""
    anchors = sorted(anchors)
    if q <= anchors[0][0]:
        return anchors[0][1]
    if q >= anchors[-1][0]:
        return anchors[-1][1]
    for (q0, e0), (q1, e1) in zip(anchors, anchors[1:]):
        if q0 <= q <= q1:
            return e0 + (e1 - e0) * (q - q0) / (q1 - q0)
    raise AssertionError


def total_penalty_oracle(q, br, n, anchors=((6000.0, 17.5), (7000.0, 16.6)), **kw):
    return er_penalty_oracle(er_oracle(q, anchors)) + 1.0 + filter_penalty_oracle(q, br, n, **kw)


def required_oracle(il, q, br, n, pp=None):
    pp = total_penalty_oracle(q, br, n) if pp is None else pp
    return il + pp + 10.0 * math.log10(n) + (-20.0 + 10.0 * math.log10(br / 10.0))


def duplet_oracle(il, p_laser, pp_table, n=55, candidates=None):
    """Naive search: every (q, br), keep the smallest non-negative margin.

    ``pp_table`` maps (q, br) -> total penalty. Ties: higher br, then higher q.
    """
    best = None
    keys = candidates if candidates is not None else sorted(pp_table)
    for q, br in keys:
        e = p_laser - required_oracle(il, q, br, n, pp_table[(q, br)])
        if e < -1e-9:
            continue
        e = max(e, 0.0)
        if best is None:
            best = (q, br, e)
            continue
        bq, bbr, be = best
        if e < be or (e == be and (br > bbr or (br == bbr and q > bq))):
            best = (q, br, e)
    return best
