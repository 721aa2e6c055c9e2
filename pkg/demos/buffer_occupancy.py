"""Buffer-occupancy statistics against the Markov-chain steady state.

Simulates the decision dynamics only (no chip-level transmission), which
makes a million slots take a couple of seconds, and prints the empirical
occupancy distribution side by side with the closed-form chain for both
protocols.
"""

import numpy as np

from dcsk_relay import montecarlo, theory
from dcsk_relay.params import reference_defaults

params = reference_defaults(25.0, slots=1_000_000, seed=42)
p_sr, p_rd = theory.link_selection_probs(params)
p_es = theory.energy_shortage_probability(params)
print(f"selection probabilities: p_sr={p_sr:.4f}, p_rd={p_rd:.4f}, "
      f"shortage={p_es:.2e}\n")

for proto in ("P1", "P2"):
    run = montecarlo.run_protocol_sim(params, proto, simulate_bits=False)
    chain = theory.steady_state(proto, params.J, p_sr, p_rd, p_es)
    empirical = run.occupancy_hist / run.occupancy_hist.sum()
    print(f"protocol {proto}:  (occupancy: simulated / chain)")
    for j, (emp, th) in enumerate(zip(empirical, chain.steady_state)):
        bar = "#" * int(120 * th)
        print(f"  {j:>2}: {emp:.4f} / {th:.4f}  {bar}")
    print(f"  max deviation: {np.max(np.abs(empirical - chain.steady_state)):.5f}\n")
