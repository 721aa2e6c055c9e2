"""Slot-by-slot Monte Carlo of the buffer-aided relay and its baselines.

The production path feeds compiled chunk kernels (see ``_kernels``) from
numpy-drawn randomness pools; a slower pure-Python path built directly on
the component modules is available for tracing and cross-checks.  Both
are deterministic for a fixed seed.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from dcsk_relay import _kernels, channel, dcsk, linksel, swipt
from dcsk_relay._kernels import ROW_PER_BIT, STATE_F_LEN, STATE_I_LEN
from dcsk_relay.linksel import Action, BufferState, PacketRecord
from dcsk_relay.params import SystemParams
from dcsk_relay.swipt import EnergyLedgerEntry

PROTOCOLS = {"P1": _kernels.PROTO_P1, "P2": _kernels.PROTO_P2,
             "SNR1": _kernels.PROTO_SNR1, "SNR2": _kernels.PROTO_SNR2}
BASELINES = ("conv_sd", "conv_no_buffer_swipt", "conv_dcsk_relay")

_CHUNK_SLOTS_BITS = 4096        # pool rows per chunk when bits are simulated
_CHUNK_SLOTS_DYN = 1 << 18      # dynamics-only chunks (taps pool only)


@dataclass
class SlotOutcome:
    """What one slot did: decision, traffic and the buffer afterwards."""

    slot: int
    decision: linksel.LinkDecision
    bits_tx: int
    bits_err: int
    harvested: swipt.HarvestReport
    buffer_after: int


@dataclass
class RunResult:
    """Aggregated outcome of one simulation run."""

    end_to_end_ber: float
    ber_stderr: float
    avg_delay_slots: float
    delay_stderr: float
    occupancy_hist: np.ndarray
    shortage_rate: float
    p_sr_selected: float
    p_rd_selected: float
    silent_rate: float
    sr_hop_ber: float
    rd_hop_ber: float
    judge_sr_rate: float
    judge_sr_interior_rate: float
    packets_delivered: int
    bits_delivered: int
    slots_observed: int
    flags: list = field(default_factory=list)


def _ber_stats(bits: int, errors: int, packets: int, packet_bits: int,
               sum_sq_pkt_err: float) -> tuple[float, float]:
    """BER and a packet-clustered standard error (bits within a slot share a fade)."""
    if bits == 0:
        return math.nan, math.nan
    ber = errors / bits
    mean_err = ber * packet_bits
    var_pkt = sum_sq_pkt_err - 2.0 * mean_err * errors + packets * mean_err ** 2
    stderr = math.sqrt(max(var_pkt, 0.0)) / bits
    return ber, stderr


def _chi_dof(beta: int) -> int:
    # orthogonal-complement degrees of freedom outside the 2-D signal
    # span; promotion draws in the kernel add back one or two when the
    # span degenerates (requires beta >= 3)
    return beta - 2


def run_protocol_sim(params: SystemParams, protocol: str,
                     simulate_bits: bool = True,
                     snr_metric_power: float | None = None) -> RunResult:
    """Simulate one protocol for ``params.slots`` slots.

    With ``simulate_bits`` off only the harvest/decision/buffer dynamics
    run (occupancy, selection and delay statistics); BER fields are NaN.

    For the SNR-based variants the R->D reliability metric is the
    instantaneous SNR at a nominal forwarding power: the stored head
    packet's residual by default (``snr_metric_power`` None), or a fixed
    power (e.g. ``params.P_S``, the conventional channel-state metric).
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    if params.beta < 3:
        # the compiled correlator sampler needs at least a 2-D noise
        # complement; tiny spreading factors go through the exact
        # chip-level reference instead
        result, _ = run_protocol_sim_python(params, protocol, simulate_bits)
        return result
    proto = PROTOCOLS[protocol]
    prof_sr, prof_rd = params.profile_sr, params.profile_rd
    J, B, beta = params.J, params.packet_bits, params.beta
    mean_harvest = (params.eta * params.theta * params.P_S
                    * prof_sr.total_power / prof_sr.path_loss)
    pbar_r_mean = max(mean_harvest - params.P_I, 1e-300)

    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((params.seed, proto))))
    state_i = np.zeros(STATE_I_LEN, np.int64)
    state_f = np.zeros(STATE_F_LEN, np.float64)
    occ_hist = np.zeros(J + 1, np.int64)
    buf_orig = np.zeros((J, B), np.uint8)
    buf_dec = np.zeros((J, B), np.uint8)
    buf_pr = np.zeros(J)
    buf_arrival = np.zeros(J, np.int64)
    buf_presil = np.zeros(J, np.int64)
    buf_countable = np.zeros(J, np.uint8)

    n_taps = 2 * (prof_sr.num_paths + prof_rd.num_paths)
    chunk = _CHUNK_SLOTS_BITS if simulate_bits else _CHUNK_SLOTS_DYN
    empty_norm = np.zeros((1, ROW_PER_BIT * B))
    empty_chi = np.zeros((1, B))

    slot0 = 0
    while slot0 < params.slots:
        n = min(chunk, params.slots - slot0)
        taps_pool = rng.standard_normal((n, n_taps))
        if simulate_bits:
            norm_pool = rng.standard_normal((n, ROW_PER_BIT * B))
            chi_pool = rng.chisquare(_chi_dof(beta), (n, B))
        else:
            norm_pool, chi_pool = empty_norm, empty_chi
        _kernels.run_buffer_chunk(
            proto, slot0, n, params.warmup_slots, J, B, beta,
            params.delta, params.P_I, pbar_r_mean,
            0.0 if snr_metric_power is None else float(snr_metric_power),
            math.sqrt((1.0 - params.theta) * params.P_S / prof_sr.path_loss),
            math.sqrt(params.n0_ir / 2.0), math.sqrt(params.n0_rd / 2.0),
            prof_rd.path_loss,
            params.eta * params.theta * params.P_S / prof_sr.path_loss,
            params.eta * params.theta * params.P_D / prof_rd.path_loss,
            2.0 * (1.0 - params.theta) * params.P_S
            / (prof_sr.path_loss * max(params.n0_ir, 1e-300)),
            2.0 / (prof_rd.path_loss * max(params.n0_rd, 1e-300)),
            prof_sr.tap_mean_powers, prof_sr.tap_delays,
            prof_rd.tap_mean_powers, prof_rd.tap_delays,
            taps_pool, norm_pool, chi_pool,
            simulate_bits, params.normalize_chips,
            state_i, state_f, occ_hist,
            buf_orig, buf_dec, buf_pr, buf_arrival, buf_presil, buf_countable)
        slot0 += n

    K = _kernels
    flags = []
    if state_i[K.SI_XOR_BAD]:
        flags.append(f"hop-error composition mismatch on {state_i[K.SI_XOR_BAD]} bits")
    delivered_packets = int(state_i[K.SI_DLV_PKTS])
    delivered_bits = int(state_i[K.SI_DLV_BITS])
    if delivered_packets == 0:
        flags.append("no packets delivered")
    ber, stderr = _ber_stats(delivered_bits, int(state_i[K.SI_E2E_ERRS]),
                             delivered_packets, B, float(state_f[K.SF_SUMSQ]))
    if delivered_packets:
        mean_d = float(state_f[K.SF_DELAY]) / delivered_packets
        var_d = max(float(state_f[K.SF_DELAY_SQ]) / delivered_packets - mean_d ** 2, 0.0)
        delay_stderr = math.sqrt(var_d / delivered_packets)
    else:
        mean_d, delay_stderr = math.nan, math.nan
    if simulate_bits and delivered_bits > 0 and state_i[K.SI_E2E_ERRS] < 10:
        flags.append(f"only {state_i[K.SI_E2E_ERRS]} bit errors observed; "
                     "BER estimate is unreliable")
        warnings.warn(flags[-1], stacklevel=2)
    n = max(int(state_i[K.SI_OBSERVED]), 1)
    sr_bits = int(state_i[K.SI_SR_BITS])
    return RunResult(
        end_to_end_ber=ber, ber_stderr=stderr,
        avg_delay_slots=mean_d,
        delay_stderr=delay_stderr,
        occupancy_hist=occ_hist,
        shortage_rate=state_i[K.SI_SHORTAGE] / n,
        p_sr_selected=state_i[K.SI_ACT_SR] / n,
        p_rd_selected=state_i[K.SI_ACT_RD] / n,
        silent_rate=state_i[K.SI_ACT_SIL] / n,
        sr_hop_ber=(state_i[K.SI_SR_ERRS] / sr_bits) if sr_bits else math.nan,
        rd_hop_ber=(state_i[K.SI_RD_ERRS] / delivered_bits) if delivered_bits else math.nan,
        judge_sr_rate=state_i[K.SI_JUDGE_SR] / n,
        judge_sr_interior_rate=(state_i[K.SI_JUDGE_SR_INT] / state_i[K.SI_INTERIOR])
        if state_i[K.SI_INTERIOR] else math.nan,
        packets_delivered=delivered_packets,
        bits_delivered=delivered_bits,
        slots_observed=int(state_i[K.SI_OBSERVED]),
        flags=flags,
    )


def run_baseline_sim(params: SystemParams, baseline: str) -> RunResult:
    """Simulate a comparator system.

    ``conv_sd``: one DCSK hop over the combined distance at full power.
    ``conv_no_buffer_swipt``: strict two-slot SWIPT relay; a shortage
    wastes the round.  ``conv_dcsk_relay``: two-slot relay with a mains
    powered relay (no splitting, no shortage).
    """
    if baseline not in BASELINES:
        raise ValueError(f"unknown baseline {baseline!r}")
    if params.beta < 3:
        raise ValueError("baseline simulations require beta >= 3")
    prof_sr, prof_rd = params.profile_sr, params.profile_rd
    B, beta = params.packet_bits, params.beta
    state_i = np.zeros(STATE_I_LEN, np.int64)
    state_f = np.zeros(STATE_F_LEN, np.float64)
    flags = []

    if baseline == "conv_sd":
        d_total = prof_sr.distance + prof_rd.distance
        pl = d_total ** prof_sr.path_loss_exponent
        packets = params.slots
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((params.seed, 100))))
        amp = math.sqrt(params.P_S / pl)
        sigma = math.sqrt(params.n0_rd / 2.0)
        n_taps = 2 * prof_sr.num_paths
        done = 0
        while done < packets:
            n = min(_CHUNK_SLOTS_BITS, packets - done)
            taps_pool = rng.standard_normal((n, n_taps))
            norm_pool = rng.standard_normal((n, ROW_PER_BIT * B))
            chi_pool = rng.chisquare(_chi_dof(beta), (n, B))
            _kernels.run_single_hop_chunk(
                n, B, beta, amp, sigma,
                prof_sr.tap_mean_powers, prof_sr.tap_delays, True,
                params.normalize_chips,
                taps_pool, norm_pool, chi_pool, state_i, state_f)
            done += n
        avg_delay = 0.0
        shortage_rate = 0.0
        slots_observed = packets
    else:
        swipt_relay = baseline == "conv_no_buffer_swipt"
        rounds = params.slots // 2
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((params.seed, 101 if swipt_relay else 102))))
        n_taps = 2 * (prof_sr.num_paths + prof_rd.num_paths)
        amp_sr = math.sqrt(((1.0 - params.theta) if swipt_relay else 1.0)
                           * params.P_S / prof_sr.path_loss)
        sig_dec = math.sqrt((params.n0_ir if swipt_relay else params.n0_sr) / 2.0)
        sig_rd = math.sqrt(params.n0_rd / 2.0)
        done = 0
        while done < rounds:
            n = min(_CHUNK_SLOTS_BITS, rounds - done)
            taps_pool = rng.standard_normal((n, n_taps))
            norm_a = rng.standard_normal((n, ROW_PER_BIT * B))
            norm_b = rng.standard_normal((n, ROW_PER_BIT * B))
            chi_a = rng.chisquare(_chi_dof(beta), (n, B))
            chi_b = rng.chisquare(_chi_dof(beta), (n, B))
            _kernels.run_two_slot_chunk(
                n, B, beta, params.P_S, params.P_I,
                amp_sr, sig_dec, sig_rd, prof_rd.path_loss,
                params.eta * params.theta * params.P_S / prof_sr.path_loss,
                prof_sr.tap_mean_powers, prof_sr.tap_delays,
                prof_rd.tap_mean_powers, prof_rd.tap_delays,
                taps_pool, norm_a, norm_b, chi_a, chi_b,
                swipt_relay, params.normalize_chips, state_i, state_f)
            done += n
        avg_delay = 1.0  # relay holds each packet exactly one slot
        shortage_rate = state_i[_kernels.SI_SHORTAGE] / rounds if rounds else math.nan
        slots_observed = 2 * rounds

    K = _kernels
    delivered_packets = int(state_i[K.SI_DLV_PKTS])
    delivered_bits = int(state_i[K.SI_DLV_BITS])
    if delivered_packets == 0:
        flags.append("no packets delivered")
    ber, stderr = _ber_stats(delivered_bits, int(state_i[K.SI_E2E_ERRS]),
                             delivered_packets, B, float(state_f[K.SF_SUMSQ]))
    return RunResult(
        end_to_end_ber=ber, ber_stderr=stderr, avg_delay_slots=avg_delay,
        delay_stderr=0.0,
        occupancy_hist=np.zeros(params.J + 1, np.int64),
        shortage_rate=shortage_rate,
        p_sr_selected=math.nan, p_rd_selected=math.nan, silent_rate=math.nan,
        sr_hop_ber=math.nan, rd_hop_ber=math.nan,
        judge_sr_rate=math.nan, judge_sr_interior_rate=math.nan,
        packets_delivered=delivered_packets,
        bits_delivered=delivered_bits,
        slots_observed=int(slots_observed), flags=flags)


# ---------------------------------------------------------------------------
# pure-Python reference path (tracing and cross-checks)


def run_protocol_sim_python(params: SystemParams, protocol: str,
                            simulate_bits: bool = True
                            ) -> tuple[RunResult, list[SlotOutcome]]:
    """Reference implementation over the component modules, with a trace.

    Slow (real chip-level propagation); intended for short runs,
    validation against the compiled path, and producing decision traces.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}")
    rng = np.random.default_rng(params.seed)
    buf = BufferState(capacity=params.J)
    ledger_meta: list[dict] = []  # parallel to buf.queue
    trace: list[SlotOutcome] = []
    variant = 1 if protocol in ("P1", "SNR1") else 2
    snr_based = protocol in ("SNR1", "SNR2")
    warmup = params.warmup_slots

    mean_harvest = (params.eta * params.theta * params.P_S
                    * params.profile_sr.total_power / params.profile_sr.path_loss)
    pbar_r_mean = max(mean_harvest - params.P_I, 1e-300)

    occ_hist = np.zeros(params.J + 1, np.int64)
    counters = dict(shortage=0, observed=0, judge=0, judge_int=0, interior=0)
    act_counts = {a: 0 for a in Action}
    delivered = []
    sr_bits = sr_errs = 0
    delivered_bits = e2e_errs = rd_errs = 0
    sum_sq = 0.0
    silent_run = 0
    next_id = 0

    for slot in range(params.slots):
        real_sr = channel.draw_realization(params.profile_sr, rng, slot)
        real_rd = channel.draw_realization(params.profile_rd, rng, slot)
        report = swipt.harvest(real_sr, real_rd, params)
        if snr_based:
            gamma_sr = (2 * (1 - params.theta) * params.P_S
                        * channel.channel_energy(real_sr)
                        / (params.profile_sr.path_loss * params.n0_ir))
            p_fwd = (ledger_meta[0]["entry"].residual_power
                     if buf.occupancy else pbar_r_mean)
            gamma_rd = (2 * p_fwd * channel.channel_energy(real_rd)
                        / (params.profile_rd.path_loss * params.n0_rd))
            decision = linksel.decide_snr_baseline(buf, gamma_sr, gamma_rd,
                                                   params.delta, variant,
                                                   report.shortage)
        elif protocol == "P1":
            decision = linksel.decide_protocol1(buf, report, params.delta)
        else:
            decision = linksel.decide_protocol2(buf, report, params.delta)

        counting = slot >= warmup
        if counting:
            counters["observed"] += 1
            counters["shortage"] += report.shortage
            act_counts[decision.action] += 1
            judge = (gamma_sr >= params.delta * gamma_rd) if snr_based else \
                (report.p_sr_eh >= params.delta * report.p_dr_eh)
            counters["judge"] += judge
            if 0 < buf.occupancy < params.J:
                counters["interior"] += 1
                counters["judge_int"] += judge

        bits_tx = bits_err = 0
        if decision.action == Action.SR_RECEIVE:
            src = rng.integers(0, 2, params.packet_bits)
            if simulate_bits:
                dec = np.empty_like(src)
                for i, b in enumerate(src):
                    frame = dcsk.modulate(int(b), dcsk.draw_reference(
                        rng, params.beta, params.normalize_chips))
                    rx = channel.propagate(frame.chips(), real_sr, params.P_S,
                                           params.n0_sr, rng)
                    # decoder branch: conversion noise tops up to n0_ir
                    extra = max(params.n0_ir - (1 - params.theta) * params.n0_sr, 0.0)
                    split = swipt.split_for_decoding(rx, params.theta, extra, rng)
                    dec[i], _ = dcsk.demodulate(split)
                bits_tx = params.packet_bits
                bits_err = int(np.sum(dec != src))
            else:
                dec = src.copy()
            pkt = PacketRecord(packet_id=next_id, bits=dec, arrival_slot=slot,
                               energy=EnergyLedgerEntry(next_id,
                                                        report.p_sr_eh - params.P_I))
            linksel.apply_decision(buf, decision, pkt)
            ledger_meta.append(dict(entry=pkt.energy, orig=src, presil=silent_run,
                                    countable=counting, arrival=slot))
            next_id += 1
            silent_run = 0
            if counting and simulate_bits:
                sr_bits += bits_tx
                sr_errs += bits_err
        elif decision.action == Action.RD_TRANSMIT:
            pkt = buf.queue[0]
            meta = ledger_meta.pop(0)
            linksel.apply_decision(buf, decision)
            if simulate_bits:
                dst = np.empty_like(pkt.bits)
                for i, b in enumerate(pkt.bits):
                    frame = dcsk.modulate(int(b), dcsk.draw_reference(
                        rng, params.beta, params.normalize_chips))
                    rx = channel.propagate(frame.chips(), real_rd,
                                           pkt.energy.residual_power,
                                           params.n0_rd, rng)
                    dst[i], _ = dcsk.demodulate(rx)
                bits_tx = len(dst)
                bits_err = int(np.sum(dst != meta["orig"]))
                if meta["countable"]:
                    delivered_bits += bits_tx
                    e2e_errs += bits_err
                    rd_errs += int(np.sum(dst != pkt.bits))
                    sum_sq += bits_err ** 2
            if meta["countable"]:
                delivered.append((slot - meta["arrival"]) + meta["presil"])
            silent_run = 0
        else:
            silent_run = silent_run + 1 if buf.empty else 0

        if counting:
            occ_hist[buf.occupancy] += 1
        trace.append(SlotOutcome(slot=slot, decision=decision, bits_tx=bits_tx,
                                 bits_err=bits_err, harvested=report,
                                 buffer_after=buf.occupancy))

    n = max(counters["observed"], 1)
    ber, stderr = _ber_stats(delivered_bits, e2e_errs, len(delivered),
                             params.packet_bits, sum_sq)
    result = RunResult(
        end_to_end_ber=ber, ber_stderr=stderr,
        avg_delay_slots=float(np.mean(delivered)) if delivered else math.nan,
        delay_stderr=(float(np.std(delivered)) / math.sqrt(len(delivered))
                      if delivered else math.nan),
        occupancy_hist=occ_hist,
        shortage_rate=counters["shortage"] / n,
        p_sr_selected=act_counts[Action.SR_RECEIVE] / n,
        p_rd_selected=act_counts[Action.RD_TRANSMIT] / n,
        silent_rate=act_counts[Action.SILENT] / n,
        sr_hop_ber=(sr_errs / sr_bits) if sr_bits else math.nan,
        rd_hop_ber=(rd_errs / delivered_bits) if delivered_bits else math.nan,
        judge_sr_rate=counters["judge"] / n,
        judge_sr_interior_rate=(counters["judge_int"] / counters["interior"])
        if counters["interior"] else math.nan,
        packets_delivered=len(delivered), bits_delivered=delivered_bits,
        slots_observed=counters["observed"],
        flags=[] if delivered else ["no packets delivered"])
    return result, trace


def measure_delay(trace: list[SlotOutcome]) -> float:
    """Average per-packet delay reconstructed from a decision trace.

    Replays the FIFO through the recorded actions; a delivered packet's
    delay is its buffer residence plus the run of empty-buffer silent
    slots immediately before its arrival.  Returns NaN (with a warning)
    when the trace delivers nothing.
    """
    arrivals: list[tuple[int, int]] = []  # (arrival slot, attributed silents)
    silent_run = 0
    occupancy = 0
    delays = []
    for out in trace:
        act = out.decision.action
        if act == Action.SR_RECEIVE:
            arrivals.append((out.slot, silent_run))
            occupancy += 1
            silent_run = 0
        elif act == Action.RD_TRANSMIT:
            slot_in, presil = arrivals.pop(0)
            delays.append((out.slot - slot_in) + presil)
            occupancy -= 1
            silent_run = 0
        else:
            silent_run = silent_run + 1 if occupancy == 0 else 0
    if not delays:
        warnings.warn("trace delivered no packets; delay undefined", stacklevel=2)
        return math.nan
    return float(np.mean(delays))
