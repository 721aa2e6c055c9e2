"""Buffer-aided DCSK-SWIPT relay link simulator and closed-form evaluator.

The package is organized around the physical layers of the link:

* :mod:`dcsk_relay.dcsk` -- chaotic spreading, transmitted-reference
  modulation and the correlation receiver.
* :mod:`dcsk_relay.channel` -- multipath Rayleigh fading with chip delays,
  distance path loss and AWGN.
* :mod:`dcsk_relay.swipt` -- power-splitting energy harvesting, decoding
  cost and the relay's per-packet energy ledger.
* :mod:`dcsk_relay.linksel` -- the data buffer and the per-slot
  link-selection protocols (harvested-energy based and SNR based).
* :mod:`dcsk_relay.montecarlo` -- slot-by-slot end-to-end simulation.
* :mod:`dcsk_relay.theory` -- closed-form BER bounds, buffer steady states
  and average-delay expressions.
* :mod:`dcsk_relay.experiments` -- reproducible parameter sweeps emitting
  CSV/JSON artifacts (also exposed as the ``dcsk-relay-sim`` command).
"""

from dcsk_relay.params import SystemParams, reference_defaults
from dcsk_relay.channel import ChannelProfile, ChannelRealization
from dcsk_relay.montecarlo import RunResult, run_protocol_sim, run_baseline_sim

__all__ = [
    "SystemParams",
    "reference_defaults",
    "ChannelProfile",
    "ChannelRealization",
    "RunResult",
    "run_protocol_sim",
    "run_baseline_sim",
]

__version__ = "0.1.0"
