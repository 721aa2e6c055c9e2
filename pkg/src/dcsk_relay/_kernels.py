"""Numba hot paths for the slot-level simulators.

The kernels are pure compute: every random number is pre-drawn by the
caller (numpy Generator pools) and passed in, which keeps the compiled
code free of RNG calls (numba's RNG fast path degrades badly when mixed
with other code on some targets) and makes runs trivially deterministic.

Chip noise is never materialized.  The correlation receiver only uses
``z = sum_k r_k r_{k+beta}``; writing the received frame as the faded
signal halves ``(a, b)`` plus white Gaussian noise ``(n1, n2)``,

    z = a.b + a.n2 + n1.(b + n2),

and by rotational invariance of white noise the exact law of ``z`` given
``(a, b)`` needs only the geometry of ``n2`` in the plane spanned by
``(a, b)`` (two normals), the squared norm of its orthogonal part (one
chi-square with ``beta - dim(span)`` degrees of freedom) and one more
normal for the ``n1`` projection.  The decision logic is shared with the
pure-Python layer through equivalence tests on injected harvest
sequences, and the sampler is validated against the chip-level reference
channel.
"""

import math

import numpy as np
from numba import njit

ACT_SR = 0
ACT_RD = 1
ACT_SILENT = 2

CAUSE_EMPTY = 0
CAUSE_FULL = 1
CAUSE_COMPARE = 2
CAUSE_SHORTAGE = 3
CAUSE_REFUSAL = 4

PROTO_P1 = 0
PROTO_P2 = 1
PROTO_SNR1 = 2
PROTO_SNR2 = 3

# state_i slots
SI_HEAD = 0
SI_SIZE = 1
SI_SILENT_RUN = 2
SI_OBSERVED = 3
SI_SHORTAGE = 4
SI_ACT_SR = 5
SI_ACT_RD = 6
SI_ACT_SIL = 7
SI_JUDGE_SR = 8
SI_JUDGE_SR_INT = 9
SI_INTERIOR = 10
SI_ARRIVALS = 11
SI_SR_BITS = 12
SI_SR_ERRS = 13
SI_DLV_PKTS = 14
SI_DLV_BITS = 15
SI_E2E_ERRS = 16
SI_RD_ERRS = 17
SI_XOR_BAD = 18
STATE_I_LEN = 19

# state_f slots
SF_SUMSQ = 0
SF_DELAY = 1
SF_DELAY_SQ = 2
STATE_F_LEN = 3

# per-bit layout inside a slot's normal-pool row: seed, bit, g1, g2, g3, p1, p2
ROW_PER_BIT = 7


@njit(cache=True)
def _decide(p2_like, occ, J, judge_sr, shortage):
    """Shared decision table. Returns (action, cause)."""
    if not p2_like:
        if occ == 0:
            if shortage:
                return ACT_SILENT, CAUSE_SHORTAGE
            return ACT_SR, CAUSE_EMPTY
        if occ == J:
            return ACT_RD, CAUSE_FULL
        if judge_sr:
            if shortage:
                return ACT_SILENT, CAUSE_SHORTAGE
            return ACT_SR, CAUSE_COMPARE
        return ACT_RD, CAUSE_COMPARE
    if judge_sr:
        if occ == J:
            if shortage:
                return ACT_SILENT, CAUSE_SHORTAGE
            return ACT_SILENT, CAUSE_REFUSAL
        if shortage:
            return ACT_SILENT, CAUSE_SHORTAGE
        return ACT_SR, CAUSE_COMPARE
    if occ == 0:
        return ACT_SILENT, CAUSE_REFUSAL
    return ACT_RD, CAUSE_COMPARE


@njit(cache=True)
def replay_decisions(p2_like, J, judge, shortage, occ0):
    """Run the decision table over injected per-slot inputs (test hook)."""
    n = judge.shape[0]
    actions = np.empty(n, np.int64)
    causes = np.empty(n, np.int64)
    occupancy = np.empty(n, np.int64)
    occ = occ0
    for i in range(n):
        act, cause = _decide(p2_like, occ, J, judge[i], shortage[i])
        if act == ACT_SR:
            occ += 1
        elif act == ACT_RD:
            occ -= 1
        actions[i] = act
        causes[i] = cause
        occupancy[i] = occ
    return actions, causes, occupancy


@njit(cache=True)
def _taps_from_normals(omega, g, base, out):
    """Rayleigh magnitudes with E{h^2} = omega[l] from I/Q normal pairs."""
    for l in range(omega.shape[0]):
        gi = g[base + 2 * l]
        gq = g[base + 2 * l + 1]
        out[l] = np.sqrt(0.5 * omega[l] * (gi * gi + gq * gq))


@njit(cache=True)
def _sum_sq(h):
    s = 0.0
    for l in range(h.shape[0]):
        s += h[l] * h[l]
    return s


@njit(cache=True)
def _fill_reference(seed, beta, normalize, ref):
    """Logistic-map reference from ``seed``; optionally scaled to half-frame
    energy 1/2 (unit bit energy per full frame, the convention under which
    the correlator SNR carries no spreading-factor term)."""
    c = seed
    if c == 0.5 or c == -1.0 or c == 0.0 or c == 1.0:
        c = 0.3183098861837907
    ssq = 0.0
    for k in range(beta):
        ref[k] = c
        ssq += c * c
        c = 1.0 - 2.0 * c * c
    if normalize:
        scale = np.sqrt(0.5 / ssq)
        for k in range(beta):
            ref[k] *= scale


@njit(cache=True)
def _uniform_pm1(z):
    """Exact (-1, 1) uniform from a standard normal via its CDF."""
    # erf(z / sqrt(2)) = 2 Phi(z) - 1
    return math.erf(z * 0.7071067811865476)


@njit(cache=True)
def _hop_bit(ref, bit, h, tau, amp, sigma, beta, x, y,
             g1, g2, g3, p1, p2, chi):
    """One bit over one hop via the exact correlator statistic.

    Builds the faded noiseless frame, then samples the correlator output
    from its exact conditional law using the pre-drawn variates:
    ``g1..g3, p1, p2`` standard normals and ``chi`` a chi-square draw
    with ``beta - 2`` degrees of freedom.  Returns the detected bit.
    """
    n2 = 2 * beta
    sign = 1.0 if bit == 1 else -1.0
    for k in range(beta):
        rk = ref[k]
        x[k] = rk
        x[k + beta] = sign * rk
    for k in range(n2):
        y[k] = 0.0
    for l in range(tau.shape[0]):
        ah = amp * h[l]
        t = tau[l]
        for k in range(t, n2):
            y[k] += ah * x[k - t]
    s_ab = 0.0
    s_aa = 0.0
    s_bb = 0.0
    for k in range(beta):
        ya = y[k]
        yb = y[k + beta]
        s_ab += ya * yb
        s_aa += ya * ya
        s_bb += yb * yb
    if sigma == 0.0:
        return 1 if s_ab > 0.0 else 0

    # n2-plane geometry: components of the second-half noise along the
    # signal halves, then its orthogonal mass
    if s_aa > 0.0:
        na = np.sqrt(s_aa)
        p = sigma * na * g1
        cross = s_ab / na
        perp_sq = s_bb - cross * cross
        if perp_sq < 0.0:
            perp_sq = 0.0
        if perp_sq > 1e-12 * s_bb:
            q = sigma * (cross * g1 + np.sqrt(perp_sq) * g2)
            orth = chi
        else:
            q = sigma * cross * g1
            orth = chi + p1 * p1
        in_plane = sigma * sigma * (g1 * g1 + (g2 * g2 if perp_sq > 1e-12 * s_bb else 0.0))
    elif s_bb > 0.0:
        p = 0.0
        q = sigma * np.sqrt(s_bb) * g2
        orth = chi + p1 * p1
        in_plane = sigma * sigma * g2 * g2
    else:
        p = 0.0
        q = 0.0
        orth = chi + p1 * p1 + p2 * p2
        in_plane = 0.0
    n2_norm_sq = in_plane + sigma * sigma * orth
    t_sq = s_bb + 2.0 * q + n2_norm_sq
    if t_sq < 0.0:
        t_sq = 0.0
    z = s_ab + p + sigma * np.sqrt(t_sq) * g3
    return 1 if z > 0.0 else 0


@njit(cache=True)
def _hop_packet(bits_in, bits_out, h, tau, amp, sigma, beta, normalize,
                ref, x, y, row_n, row_chi):
    """Send a packet over one hop.

    ``row_n`` is the slot's normal pool (ROW_PER_BIT entries per bit:
    seed, bit source, g1, g2, g3, promote1, promote2); ``row_chi`` its
    chi-square pool (one per bit).  The bit-source entry is unused here
    (the caller decides the payload).
    """
    n_err = 0
    for i in range(bits_in.shape[0]):
        o = ROW_PER_BIT * i
        _fill_reference(_uniform_pm1(row_n[o]), beta, normalize, ref)
        b = _hop_bit(ref, bits_in[i], h, tau, amp, sigma, beta, x, y,
                     row_n[o + 2], row_n[o + 3], row_n[o + 4],
                     row_n[o + 5], row_n[o + 6], row_chi[i])
        bits_out[i] = b
        if b != bits_in[i]:
            n_err += 1
    return n_err


@njit(cache=True)
def run_buffer_chunk(protocol, slot0, n_slots, warmup, J, B, beta,
                     delta, p_i, pbar_r_mean, snr_nominal_power,
                     amp_sr, sig_ir, sig_rd, pl_rd,
                     harvest_k_sr, harvest_k_dr, snr_k_sr, snr_k_rd,
                     omega_sr, tau_sr, omega_rd, tau_rd,
                     taps_pool, norm_pool, chi_pool,
                     simulate_bits, normalize,
                     state_i, state_f, occ_hist,
                     buf_orig, buf_dec, buf_pr, buf_arrival,
                     buf_presil, buf_countable):
    """Advance the buffer-protocol simulation by one chunk of slots.

    All mutable state lives in the passed arrays so the caller can chain
    chunks; pools hold one row per slot (taps always; frame pools only
    when bits are simulated).
    """
    p2_like = protocol == PROTO_P2 or protocol == PROTO_SNR2
    snr_based = protocol == PROTO_SNR1 or protocol == PROTO_SNR2

    L_sr = omega_sr.shape[0]
    h_sr = np.empty(L_sr)
    h_rd = np.empty(omega_rd.shape[0])
    ref = np.empty(beta)
    x = np.empty(2 * beta)
    y = np.empty(2 * beta)
    src_bits = np.zeros(B, np.uint8)
    rel_bits = np.zeros(B, np.uint8)
    dst_bits = np.zeros(B, np.uint8)

    head = state_i[SI_HEAD]
    size = state_i[SI_SIZE]
    silent_run = state_i[SI_SILENT_RUN]

    for s in range(n_slots):
        slot = slot0 + s
        _taps_from_normals(omega_sr, taps_pool[s], 0, h_sr)
        _taps_from_normals(omega_rd, taps_pool[s], 2 * L_sr, h_rd)
        e_sr = _sum_sq(h_sr)
        e_rd = _sum_sq(h_rd)
        p_sr_eh = harvest_k_sr * e_sr
        p_dr_eh = harvest_k_dr * e_rd
        shortage = not (p_sr_eh > p_i)

        if snr_based:
            gamma_sr = snr_k_sr * e_sr
            if snr_nominal_power > 0.0:
                p_fwd = snr_nominal_power
            else:
                p_fwd = buf_pr[head] if size > 0 else pbar_r_mean
            gamma_rd = snr_k_rd * p_fwd * e_rd
            judge_sr = gamma_sr >= delta * gamma_rd
        else:
            judge_sr = p_sr_eh >= delta * p_dr_eh

        act, cause = _decide(p2_like, size, J, judge_sr, shortage)

        counting = slot >= warmup
        if counting:
            state_i[SI_OBSERVED] += 1
            if shortage:
                state_i[SI_SHORTAGE] += 1
            state_i[SI_ACT_SR + act] += 1
            if judge_sr:
                state_i[SI_JUDGE_SR] += 1
            if 0 < size < J:
                state_i[SI_INTERIOR] += 1
                if judge_sr:
                    state_i[SI_JUDGE_SR_INT] += 1

        if act == ACT_SR:
            idx = (head + size) % J
            if simulate_bits:
                row_n = norm_pool[s]
                for i in range(B):
                    src_bits[i] = 1 if row_n[ROW_PER_BIT * i + 1] > 0.0 else 0
                n_err = _hop_packet(src_bits, rel_bits, h_sr, tau_sr, amp_sr,
                                    sig_ir, beta, normalize, ref, x, y,
                                    row_n, chi_pool[s])
                for i in range(B):
                    buf_orig[idx, i] = src_bits[i]
                    buf_dec[idx, i] = rel_bits[i]
                if counting:
                    state_i[SI_SR_BITS] += B
                    state_i[SI_SR_ERRS] += n_err
            buf_pr[idx] = p_sr_eh - p_i
            buf_arrival[idx] = slot
            buf_presil[idx] = silent_run
            buf_countable[idx] = 1 if counting else 0
            size += 1
            silent_run = 0
            if counting:
                state_i[SI_ARRIVALS] += 1
        elif act == ACT_RD:
            idx = head
            head = (head + 1) % J
            size -= 1
            countable = buf_countable[idx] == 1
            if simulate_bits:
                amp_rd = np.sqrt(buf_pr[idx] / pl_rd)
                for i in range(B):
                    rel_bits[i] = buf_dec[idx, i]
                _hop_packet(rel_bits, dst_bits, h_rd, tau_rd, amp_rd,
                            sig_rd, beta, normalize, ref, x, y,
                            norm_pool[s], chi_pool[s])
                if countable:
                    pkt_err = 0
                    for i in range(B):
                        e2e_wrong = dst_bits[i] != buf_orig[idx, i]
                        sr_flip = buf_dec[idx, i] != buf_orig[idx, i]
                        rd_flip = dst_bits[i] != buf_dec[idx, i]
                        if e2e_wrong:
                            pkt_err += 1
                        if rd_flip:
                            state_i[SI_RD_ERRS] += 1
                        if e2e_wrong != (sr_flip != rd_flip):
                            state_i[SI_XOR_BAD] += 1
                    state_i[SI_DLV_BITS] += B
                    state_i[SI_E2E_ERRS] += pkt_err
                    state_f[SF_SUMSQ] += pkt_err * pkt_err
            if countable:
                state_i[SI_DLV_PKTS] += 1
                d = (slot - buf_arrival[idx]) + buf_presil[idx]
                state_f[SF_DELAY] += d
                state_f[SF_DELAY_SQ] += d * d
            silent_run = 0
        else:
            if size == 0:
                silent_run += 1
            else:
                silent_run = 0

        if counting:
            occ_hist[size] += 1

    state_i[SI_HEAD] = head
    state_i[SI_SIZE] = size
    state_i[SI_SILENT_RUN] = silent_run


@njit(cache=True)
def run_two_slot_chunk(n_rounds, B, beta, p_s, p_i,
                       amp_sr, sig_dec, sig_rd, pl_rd, harvest_k,
                       omega_sr, tau_sr, omega_rd, tau_rd,
                       taps_pool, norm_pool_a, norm_pool_b, chi_pool_a, chi_pool_b,
                       swipt, normalize, state_i, state_f):
    """Fixed-alternation two-slot relay, one chunk of rounds.

    With SWIPT at the relay a shortage round delivers nothing (the source
    retries with a fresh packet); a mains-powered relay (``swipt`` off)
    forwards every packet at full source power.  Reuses the buffer-state
    counter slots: shortage rounds, delivered packets/bits, errors.
    """
    h_sr = np.empty(omega_sr.shape[0])
    h_rd = np.empty(omega_rd.shape[0])
    ref = np.empty(beta)
    x = np.empty(2 * beta)
    y = np.empty(2 * beta)
    src_bits = np.zeros(B, np.uint8)
    rel_bits = np.zeros(B, np.uint8)
    dst_bits = np.zeros(B, np.uint8)
    L_sr = omega_sr.shape[0]

    for r in range(n_rounds):
        _taps_from_normals(omega_sr, taps_pool[r], 0, h_sr)
        _taps_from_normals(omega_rd, taps_pool[r], 2 * L_sr, h_rd)
        state_i[SI_OBSERVED] += 2
        if swipt:
            p_eh = harvest_k * _sum_sq(h_sr)
            if not (p_eh > p_i):
                state_i[SI_SHORTAGE] += 1
                continue
            p_fwd = p_eh - p_i
        else:
            p_fwd = p_s
        row_a = norm_pool_a[r]
        for i in range(B):
            src_bits[i] = 1 if row_a[ROW_PER_BIT * i + 1] > 0.0 else 0
        _hop_packet(src_bits, rel_bits, h_sr, tau_sr, amp_sr, sig_dec,
                    beta, normalize, ref, x, y, row_a, chi_pool_a[r])
        amp_rd = np.sqrt(p_fwd / pl_rd)
        _hop_packet(rel_bits, dst_bits, h_rd, tau_rd, amp_rd, sig_rd,
                    beta, normalize, ref, x, y, norm_pool_b[r], chi_pool_b[r])
        pkt_err = 0
        for i in range(B):
            if dst_bits[i] != src_bits[i]:
                pkt_err += 1
        state_i[SI_DLV_PKTS] += 1
        state_i[SI_DLV_BITS] += B
        state_i[SI_E2E_ERRS] += pkt_err
        state_f[SF_SUMSQ] += pkt_err * pkt_err


@njit(cache=True)
def run_single_hop_chunk(n_packets, B, beta, amp, sigma,
                         omega, tau, fading, normalize,
                         taps_pool, norm_pool, chi_pool, state_i, state_f):
    """Point-to-point DCSK link chunk. ``fading`` off pins taps at sqrt(omega)."""
    L = omega.shape[0]
    h = np.empty(L)
    ref = np.empty(beta)
    x = np.empty(2 * beta)
    y = np.empty(2 * beta)
    src_bits = np.zeros(B, np.uint8)
    out_bits = np.zeros(B, np.uint8)

    for p in range(n_packets):
        if fading:
            _taps_from_normals(omega, taps_pool[p], 0, h)
        else:
            for l in range(L):
                h[l] = np.sqrt(omega[l])
        row_n = norm_pool[p]
        for i in range(B):
            src_bits[i] = 1 if row_n[ROW_PER_BIT * i + 1] > 0.0 else 0
        n_err = _hop_packet(src_bits, out_bits, h, tau, amp, sigma,
                            beta, normalize, ref, x, y, row_n, chi_pool[p])
        state_i[SI_OBSERVED] += 1
        state_i[SI_DLV_PKTS] += 1
        state_i[SI_DLV_BITS] += B
        state_i[SI_E2E_ERRS] += n_err
        state_f[SF_SUMSQ] += n_err * n_err
