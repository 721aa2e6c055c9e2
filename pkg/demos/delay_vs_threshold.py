"""Average packet delay versus the selection threshold.

Shows the opposite threshold sensitivities of the two protocols: the
forced protocol's delay falls as forwarding is favored, while the
non-forcing protocol pays for extreme thresholds with silent slots.
Theory lines come from the queueing closed forms.
"""

from dcsk_relay import montecarlo, theory
from dcsk_relay.params import reference_defaults

DELTAS = [0.2, 0.5, 0.8, 1.05, 1.4, 1.8, 2.2, 2.6, 3.0]

print(f"{'delta':>6} {'P1 sim':>9} {'P1 thry':>9} {'P2 sim':>9} {'P2 thry':>9}")
for delta in DELTAS:
    params = reference_defaults(30.0, delta=delta, slots=400_000, seed=7)
    r1 = montecarlo.run_protocol_sim(params, "P1", simulate_bits=False)
    r2 = montecarlo.run_protocol_sim(params, "P2", simulate_bits=False)
    t1 = theory.delay_protocol1(params)
    t2 = theory.delay_protocol2(params)
    print(f"{delta:>6.2f} {r1.avg_delay_slots:>9.3f} {t1:>9.3f} "
          f"{r2.avg_delay_slots:>9.3f} {t2:>9.3f}")
