"""End-to-end simulator: exactness checks, determinism, reference parity."""

import math

import numpy as np
import pytest

from dcsk_relay import montecarlo as mc
from dcsk_relay import theory
from dcsk_relay.params import reference_defaults


def test_noiseless_shortage_free_run_is_error_free():
    p = reference_defaults(30.0, slots=25_000, seed=3).with_overrides(
        P_I=0.0, n0_sr=0.0, n0_rd=0.0, n0_si=0.0, n0_ir_override=0.0)
    with pytest.warns(UserWarning, match="unreliable"):  # zero errors, by design
        r = mc.run_protocol_sim(p, "P1")
    assert r.packets_delivered >= 10_000
    assert r.end_to_end_ber == 0.0
    assert r.shortage_rate == 0.0


def test_j1_forces_alternation():
    p = reference_defaults(25.0, J=1, slots=20_000, seed=5).with_overrides(P_I=0.0)
    r = mc.run_protocol_sim(p, "P1", simulate_bits=False)
    # occupancy only ever 0 or 1, and every delivered packet waited one slot
    assert r.occupancy_hist[0] + r.occupancy_hist[1] == r.slots_observed
    assert r.avg_delay_slots == pytest.approx(1.0)


def test_deterministic_runs():
    p = reference_defaults(20.0, slots=6_000, seed=11)
    a = mc.run_protocol_sim(p, "P2")
    b = mc.run_protocol_sim(p, "P2")
    assert a.end_to_end_ber == b.end_to_end_ber
    assert a.ber_stderr == b.ber_stderr
    assert a.avg_delay_slots == b.avg_delay_slots
    assert np.array_equal(a.occupancy_hist, b.occupancy_hist)
    assert a.packets_delivered == b.packets_delivered


def test_seed_changes_the_run():
    p = reference_defaults(20.0, slots=6_000, seed=11)
    q = p.with_overrides(seed=12)
    assert (mc.run_protocol_sim(p, "P1").end_to_end_ber
            != mc.run_protocol_sim(q, "P1").end_to_end_ber)


def test_hop_error_composition_is_exact_xor():
    # destination bit wrong iff exactly one hop flipped it
    p = reference_defaults(15.0, slots=8_000, seed=7)
    r = mc.run_protocol_sim(p, "P1")
    assert not any("composition" in f for f in r.flags)
    assert r.end_to_end_ber > 0  # errors actually occurred at 15 dB


def test_low_error_warning():
    p = reference_defaults(40.0, slots=2_000, seed=9)
    with pytest.warns(UserWarning, match="unreliable"):
        r = mc.run_protocol_sim(p, "P2")
    assert any("unreliable" in f for f in r.flags)


def test_unknown_protocol_and_baseline_rejected():
    p = reference_defaults(20.0, slots=100)
    with pytest.raises(ValueError):
        mc.run_protocol_sim(p, "P3")
    with pytest.raises(ValueError):
        mc.run_baseline_sim(p, "conv_unknown")


def test_kernel_vs_python_reference_dynamics():
    """Occupancy, selection and delay agree between the compiled path and
    the pure-Python reference within Monte Carlo error."""
    pk = reference_defaults(25.0, slots=400_000, seed=21)
    pp = reference_defaults(25.0, slots=40_000, seed=22)
    for proto in ("P1", "P2"):
        rk = mc.run_protocol_sim(pk, proto, simulate_bits=False)
        rp, trace = mc.run_protocol_sim_python(pp, proto, simulate_bits=False)
        assert rk.p_sr_selected == pytest.approx(rp.p_sr_selected, abs=0.01)
        assert rk.silent_rate == pytest.approx(rp.silent_rate, abs=0.01)
        assert rk.avg_delay_slots == pytest.approx(rp.avg_delay_slots, rel=0.05)
        hk = rk.occupancy_hist / rk.occupancy_hist.sum()
        hp = rp.occupancy_hist / rp.occupancy_hist.sum()
        assert np.max(np.abs(hk - hp)) < 0.02


def test_kernel_vs_python_reference_ber():
    """Chip-level reference channel agrees with the sufficient-statistic
    kernel at a noisy operating point."""
    pk = reference_defaults(15.0, slots=60_000, seed=31)
    rk = mc.run_protocol_sim(pk, "P1")
    pp = reference_defaults(15.0, slots=600, seed=33, packet_bits=60)
    rp, _ = mc.run_protocol_sim_python(pp, "P1")
    sigma = math.hypot(rk.ber_stderr, rp.ber_stderr)
    assert abs(rk.end_to_end_ber - rp.end_to_end_ber) < 4.0 * sigma


def test_measure_delay_matches_inline_accounting():
    p = reference_defaults(25.0, slots=20_000, seed=41)
    result, trace = mc.run_protocol_sim_python(p, "P2", simulate_bits=False)
    replau = mc.measure_delay(trace)
    # measure_delay covers all delivered packets (no warmup cut), so allow
    # the small transient difference
    assert replau == pytest.approx(result.avg_delay_slots, rel=0.05)


def test_measure_delay_empty_trace_flagged():
    with pytest.warns(UserWarning, match="delay undefined"):
        assert math.isnan(mc.measure_delay([]))


def test_occupancy_matches_chain_smoke():
    p = reference_defaults(25.0, slots=300_000, seed=43)
    r = mc.run_protocol_sim(p, "P2", simulate_bits=False)
    p_sr, p_rd = theory.link_selection_probs(p)
    chain = theory.steady_state("P2", p.J, p_sr, p_rd,
                                theory.energy_shortage_probability(p))
    emp = r.occupancy_hist / r.occupancy_hist.sum()
    assert np.max(np.abs(emp - chain.steady_state)) < 0.02


def test_occupancy_hist_counts_observed_slots():
    p = reference_defaults(20.0, slots=5_000, seed=45)
    r = mc.run_protocol_sim(p, "P1", simulate_bits=False)
    assert r.occupancy_hist.sum() == r.slots_observed
    assert r.slots_observed == p.slots - p.warmup_slots


class TestBaselines:
    def test_conv_relay_noiseless_error_free(self):
        p = reference_defaults(30.0, slots=4_000, seed=47).with_overrides(
            n0_sr=0.0, n0_rd=0.0, n0_si=0.0, n0_ir_override=0.0)
        r = mc.run_baseline_sim(p, "conv_dcsk_relay")
        assert r.end_to_end_ber == 0.0
        assert r.packets_delivered == p.slots // 2

    def test_conv_no_buffer_shortage_rate(self):
        p = reference_defaults(25.0, slots=400_000, seed=49)
        r = mc.run_baseline_sim(p, "conv_no_buffer_swipt")
        expected = theory.energy_shortage_probability(p)
        assert r.shortage_rate == pytest.approx(expected, abs=0.002)
        assert r.packets_delivered == p.slots // 2 - round(
            r.shortage_rate * (p.slots // 2))

    def test_conv_sd_uses_total_distance(self):
        # moving the relay point does not change the single-hop baseline
        pa = reference_defaults(20.0, slots=3_000, seed=51, d_sr=0.7, d_rd=1.3)
        pb = reference_defaults(20.0, slots=3_000, seed=51, d_sr=1.0, d_rd=1.0)
        ra = mc.run_baseline_sim(pa, "conv_sd")
        rb = mc.run_baseline_sim(pb, "conv_sd")
        assert ra.end_to_end_ber == rb.end_to_end_ber

    def test_two_hop_worse_than_relay_with_mains_power(self):
        p = reference_defaults(20.0, slots=60_000, seed=53)
        swipt_relay = mc.run_baseline_sim(p, "conv_no_buffer_swipt")
        mains_relay = mc.run_baseline_sim(p, "conv_dcsk_relay")
        assert mains_relay.end_to_end_ber < swipt_relay.end_to_end_ber


def test_snr_metric_power_convention_switch():
    p = reference_defaults(20.0, slots=30_000, seed=55)
    head = mc.run_protocol_sim(p, "SNR2")
    nominal = mc.run_protocol_sim(p, "SNR2", snr_metric_power=p.P_S)
    # the nominal-power metric favors forwarding, draining the buffer
    assert nominal.avg_delay_slots < head.avg_delay_slots


def test_tiny_spreading_factor_uses_reference_path():
    from dcsk_relay.channel import ChannelProfile
    prof = ChannelProfile.equal_power(1)
    p = reference_defaults(12.0, beta=2, slots=300, seed=3, packet_bits=20,
                       profile_sr=prof, profile_rd=prof)
    r = mc.run_protocol_sim(p, "P1")
    ref, _ = mc.run_protocol_sim_python(p, "P1")
    assert r.end_to_end_ber == ref.end_to_end_ber
    with pytest.raises(ValueError, match="beta"):
        mc.run_baseline_sim(p, "conv_sd")
