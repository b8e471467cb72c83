"""Compiled Monte Carlo kernels.

Everything here is deliberately independent of the closed-form machinery:
paths are generated event by event from the model primitives so the
estimates can certify the analytic values.  The RNG is a counter-seeded
xoshiro256** with one stream per path (per pair when antithetic), so runs
are reproducible regardless of scheduling.

Path construction between Poisson events is exact in law: the segment
endpoint is Gaussian, zero crossings are decided by the Brownian bridge
crossing probability, and crossing times are drawn from the inverse
Gaussian representation of the conditioned first-passage time.  Reflection
at zero (bail-out paths) falls back to short Skorokhod substeps only while
the path sits at the boundary; the only systematic error is that substep
injections are discounted at the substep end, and each path accumulates an
exact upper bound for that gap.
"""

import numpy as np
from numba import njit

U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U64_SM1 = np.uint64(0xBF58476D1CE4E5B9)
U64_SM2 = np.uint64(0x94D049BB133111EB)
U64_1 = np.uint64(1)
U64_5 = np.uint64(5)
U64_7 = np.uint64(7)
U64_9 = np.uint64(9)
U64_11 = np.uint64(11)
U64_17 = np.uint64(17)
U64_27 = np.uint64(27)
U64_30 = np.uint64(30)
U64_31 = np.uint64(31)
U64_45 = np.uint64(45)
U64_64 = np.uint64(64)
INV53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * np.pi


@njit(cache=True)
def _splitmix64(state):
    state = state + U64_GOLDEN
    z = state
    z = (z ^ (z >> U64_30)) * U64_SM1
    z = (z ^ (z >> U64_27)) * U64_SM2
    z = z ^ (z >> U64_31)
    return state, z


@njit(cache=True)
def _init_state(seed, stream):
    s = np.empty(4, np.uint64)
    x = seed ^ ((stream + U64_1) * U64_GOLDEN)
    for i in range(4):
        x, z = _splitmix64(x)
        s[i] = z
    return s


@njit(cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (U64_64 - k))


@njit(cache=True)
def _next64(s):
    result = _rotl(s[1] * U64_5, U64_7) * U64_9
    t = s[1] << U64_17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], U64_45)
    return result


@njit(cache=True)
def _next_unit(s):
    # 53-bit mantissa shifted into (0, 1); never exactly 0 or 1
    return (np.float64(_next64(s) >> U64_11) + 0.5) * INV53


@njit(cache=True)
def _draw_u(s, anti):
    u = _next_unit(s)
    if anti:
        return 1.0 - u
    return u


@njit(cache=True)
def _draw_normal(s, anti):
    u1 = _next_unit(s)
    u2 = _next_unit(s)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(TWO_PI * u2)
    if anti:
        return -z
    return z


@njit(cache=True)
def _sample_ph(s, anti, alpha_cum, rates, absorb_p, trans_cum):
    # continuous-time chain: accumulate exponential holding times until
    # absorption; trans_cum rows are conditional on not absorbing
    m = alpha_cum.shape[0]
    u = _draw_u(s, anti)
    j = 0
    while j < m - 1 and u > alpha_cum[j]:
        j += 1
    total = 0.0
    while True:
        total += -np.log(_draw_u(s, anti)) / rates[j]
        if _draw_u(s, anti) <= absorb_p[j]:
            return total
        u = _draw_u(s, anti)
        k = 0
        while k < m - 1 and u > trans_cum[j, k]:
            k += 1
        j = k


@njit(cache=True)
def _sample_ig(s, anti, mu, lam):
    z = _draw_normal(s, anti)
    if mu > 1e8:
        # one-sided stable limit of the inverse Gaussian
        if z == 0.0:
            z = 1e-154
        return lam / (z * z)
    w = mu * z * z
    x1 = mu * (1.0 - 2.0 * w / (w + np.sqrt(w * (4.0 * lam + w))))
    u = _draw_u(s, anti)
    if u <= mu / (mu + x1):
        return x1
    return mu * mu / x1


@njit(cache=True)
def _bridge_min(s, anti, a, e, sig2h):
    # minimum of a Brownian bridge from a to e with variance sig2h
    u = _draw_u(s, anti)
    big_l = -0.5 * sig2h * np.log(u)
    d = a - e
    return 0.5 * ((a + e) - np.sqrt(d * d + 4.0 * big_l))


@njit(cache=True)
def _hit_time(s, anti, a, e, sig2h, h):
    # first passage to 0 of the bridge from a > 0 to e, given it happens:
    # tau/(h - tau) is inverse Gaussian with mean a/|e| and shape a^2/sig2h
    ae = abs(e)
    if ae < 1e-300:
        ae = 1e-300
    w = _sample_ig(s, anti, a / ae, a * a / sig2h)
    return h * (w / (1.0 + w))


@njit(cache=True)
def run_dividends(n_paths, seed, antithetic, x0, barrier, c, sigma, kappa,
                  r, q, t_max, alpha_cum, rates, absorb_p, trans_cum,
                  div_out, ruin_out, time_out, nobs_out):
    """Periodic dividend paths absorbed at the first passage below zero.

    Fills per-path discounted dividends, a ruin flag, the ruin or horizon
    time, and the number of decision epochs.
    """
    lam_tot = kappa + r
    jump_p = kappa / lam_tot
    sig2 = sigma * sigma
    for p in range(n_paths):
        if antithetic:
            stream = np.uint64(p >> 1)
            anti = (p & 1) == 1
        else:
            stream = np.uint64(p)
            anti = False
        s = _init_state(seed, stream)
        t = 0.0
        u = x0
        div = 0.0
        nobs = 0
        alive = True
        while t < t_max:
            if u <= 0.0:
                alive = False
                break
            dt = -np.log(_draw_u(s, anti)) / lam_tot
            truncated = False
            if t + dt >= t_max:
                dt = t_max - t
                truncated = True
            if sigma > 0.0:
                z = _draw_normal(s, anti)
                e = u - c * dt + sigma * np.sqrt(dt) * z
                sig2h = sig2 * dt
                crossed = False
                if e <= 0.0:
                    crossed = True
                else:
                    expo = -2.0 * u * e / sig2h
                    if expo > -40.0 and np.log(_draw_u(s, anti)) < expo:
                        crossed = True
                if crossed:
                    tau = _hit_time(s, anti, u, e, sig2h, dt)
                    if tau > dt:
                        tau = dt
                    t = t + tau
                    alive = False
                    break
                u = e
            else:
                e = u - c * dt
                if e <= 0.0:
                    t = t + u / c
                    alive = False
                    break
                u = e
            t = t + dt
            if truncated:
                break
            if _draw_u(s, anti) < jump_p:
                u = u + _sample_ph(s, anti, alpha_cum, rates, absorb_p,
                                   trans_cum)
            else:
                nobs += 1
                if u > barrier:
                    div += np.exp(-q * t) * (u - barrier)
                    u = barrier
        div_out[p] = div
        ruin_out[p] = 0 if alive else 1
        time_out[p] = t
        nobs_out[p] = nobs


@njit(cache=True)
def run_bailout(n_paths, seed, antithetic, x0, barrier, c, sigma, kappa,
                r, q, t_max, dt_max, alpha_cum, rates, absorb_p, trans_cum,
                div_out, inj_out, raw_out, gap_out, nobs_out):
    """Bail-out paths reflected at zero by capital injections.

    Fills per-path discounted dividends, discounted injections, raw
    injected mass, an exact upper bound on the discounting gap caused by
    charging substep injections at the substep end, and the number of
    decision epochs.
    """
    lam_tot = kappa + r
    jump_p = kappa / lam_tot
    sig2 = sigma * sigma
    for p in range(n_paths):
        if antithetic:
            stream = np.uint64(p >> 1)
            anti = (p & 1) == 1
        else:
            stream = np.uint64(p)
            anti = False
        s = _init_state(seed, stream)
        t = 0.0
        u = x0
        div = 0.0
        inj = 0.0
        raw = 0.0
        gap = 0.0
        nobs = 0
        while t < t_max:
            dt = -np.log(_draw_u(s, anti)) / lam_tot
            truncated = False
            if t + dt >= t_max:
                dt = t_max - t
                truncated = True
            if sigma > 0.0:
                rem = dt
                while rem > 1e-15:
                    if u > 0.0:
                        # free path over the whole remainder unless it
                        # crosses zero, in which case land at the exact
                        # first-passage time
                        z = _draw_normal(s, anti)
                        e = u - c * rem + sigma * np.sqrt(rem) * z
                        sig2h = sig2 * rem
                        crossed = False
                        if e <= 0.0:
                            crossed = True
                        else:
                            expo = -2.0 * u * e / sig2h
                            if expo > -40.0 and np.log(_draw_u(s, anti)) < expo:
                                crossed = True
                        if not crossed:
                            u = e
                            t = t + rem
                            rem = 0.0
                        else:
                            tau = _hit_time(s, anti, u, e, sig2h, rem)
                            if tau > rem:
                                tau = rem
                            t = t + tau
                            rem = rem - tau
                            u = 0.0
                    else:
                        # pinned at the boundary: one short reflected
                        # substep via the Skorokhod construction
                        h = dt_max if dt_max < rem else rem
                        z = _draw_normal(s, anti)
                        e = u - c * h + sigma * np.sqrt(h) * z
                        m = _bridge_min(s, anti, u, e, sig2 * h)
                        dr = -m if m < 0.0 else 0.0
                        t = t + h
                        rem = rem - h
                        if dr > 0.0:
                            df_end = np.exp(-q * t)
                            inj += df_end * dr
                            raw += dr
                            gap += (np.exp(-q * (t - h)) - df_end) * dr
                        u = e + dr
            else:
                e = u - c * dt
                if e < 0.0:
                    # drift pins the path at zero from the crossing time to
                    # the segment end; injections discount in closed form
                    th = u / c
                    inj += (c / q) * (np.exp(-q * (t + th))
                                      - np.exp(-q * (t + dt)))
                    raw += c * (dt - th)
                    u = 0.0
                else:
                    u = e
                t = t + dt
            if truncated:
                break
            if _draw_u(s, anti) < jump_p:
                u = u + _sample_ph(s, anti, alpha_cum, rates, absorb_p,
                                   trans_cum)
            else:
                nobs += 1
                if u > barrier:
                    div += np.exp(-q * t) * (u - barrier)
                    u = barrier
        div_out[p] = div
        inj_out[p] = inj
        raw_out[p] = raw
        gap_out[p] = gap
        nobs_out[p] = nobs


@njit(cache=True)
def raw64_block(n, s0, s1, s2, s3, out):
    """Raw xoshiro256** outputs from an explicit state, for RNG tests."""
    s = np.empty(4, np.uint64)
    s[0] = s0
    s[1] = s1
    s[2] = s2
    s[3] = s3
    for i in range(n):
        out[i] = _next64(s)


@njit(cache=True)
def init_state_block(seed, stream, out):
    s = _init_state(seed, stream)
    for i in range(4):
        out[i] = s[i]


@njit(cache=True)
def uniform_block(n, seed, stream, anti, out):
    s = _init_state(seed, stream)
    for i in range(n):
        out[i] = _draw_u(s, anti)


@njit(cache=True)
def normal_block(n, seed, stream, anti, out):
    s = _init_state(seed, stream)
    for i in range(n):
        out[i] = _draw_normal(s, anti)


@njit(cache=True)
def ph_block(n, seed, alpha_cum, rates, absorb_p, trans_cum, out):
    s = _init_state(seed, np.uint64(0))
    for i in range(n):
        out[i] = _sample_ph(s, False, alpha_cum, rates, absorb_p, trans_cum)


@njit(cache=True)
def ig_block(n, seed, mu, lam, out):
    s = _init_state(seed, np.uint64(0))
    for i in range(n):
        out[i] = _sample_ig(s, False, mu, lam)


@njit(cache=True)
def bridge_min_block(n, seed, a, e, sig2h, out):
    s = _init_state(seed, np.uint64(0))
    for i in range(n):
        out[i] = _bridge_min(s, False, a, e, sig2h)


@njit(cache=True)
def hit_time_block(n, seed, a, e, sig2h, h, out):
    s = _init_state(seed, np.uint64(0))
    for i in range(n):
        out[i] = _hit_time(s, False, a, e, sig2h, h)
