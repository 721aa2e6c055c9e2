"""One slot, chip by chip: modulation, SWIPT split, fading, correlation.

Walks a single packet through the reference (pure numpy) signal path and
prints the intermediate quantities, which is the easiest way to see how
the pieces fit together before reading the vectorized simulator.
"""

import numpy as np

from dcsk_relay import channel, dcsk, swipt
from dcsk_relay.params import reference_defaults

params = reference_defaults(20.0, seed=1)
rng = np.random.default_rng(params.seed)

# block-fading realizations for the slot (reciprocal: pilots and data
# share them)
real_sr = channel.draw_realization(params.profile_sr, rng)
real_rd = channel.draw_realization(params.profile_rd, rng)
print("S->R taps:", np.round(real_sr.taps, 4), " energy:",
      round(channel.channel_energy(real_sr), 4))
print("R->D taps:", np.round(real_rd.taps, 4), " energy:",
      round(channel.channel_energy(real_rd), 4))

report = swipt.harvest(real_sr, real_rd, params)
print(f"\npilot harvests: S->R {report.p_sr_eh:.4f}, D->R {report.p_dr_eh:.4f} "
      f"(decoding cost {params.P_I:.4f}, shortage: {report.shortage})")
residual = report.p_sr_eh - params.P_I
print(f"residual forwarding power if stored: {residual:.4f}")

bit = 1
reference = dcsk.draw_reference(rng, params.beta)
frame = dcsk.modulate(bit, reference)
print(f"\nbit {bit} -> frame of {2 * params.beta} chips, "
      f"frame energy {np.sum(frame.chips() ** 2):.4f}")

received = channel.propagate(frame.chips(), real_sr, params.P_S,
                             params.n0_sr, rng)
extra_noise = max(params.n0_ir - (1 - params.theta) * params.n0_sr, 0.0)
decoder_in = swipt.split_for_decoding(received, params.theta, extra_noise, rng)
estimate, metric = dcsk.demodulate(decoder_in)
print(f"relay correlator output z = {metric.z:.4f} -> bit estimate {estimate}")

# decode-and-forward: fresh chaotic reference at the stored residual power
forward = dcsk.modulate(estimate, dcsk.draw_reference(rng, params.beta))
at_destination = channel.propagate(forward.chips(), real_rd, residual,
                                   params.n0_rd, rng)
final, metric = dcsk.demodulate(at_destination)
print(f"destination correlator output z = {metric.z:.4f} -> bit {final} "
      f"({'ok' if final == bit else 'ERROR'})")
