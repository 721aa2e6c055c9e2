"""Power-splitting SWIPT at the relay: harvesting, decoding cost, shortage.

A fraction ``theta`` of the received pilot power feeds the energy
harvester (scaled by the conversion efficiency ``eta``); the remaining
``1 - theta`` goes to the information decoder.  Demodulation itself costs
``P_I``; when the harvest cannot cover it the slot is an energy shortage
and nothing is received.  The residual ``P_R = P_harvest - P_I`` is stored
with the packet and spent when that packet is forwarded (harvest-store-use
discipline with strict per-packet accounting).
"""

from dataclasses import dataclass

import numpy as np

from dcsk_relay import channel
from dcsk_relay.special import regularized_lower_gamma


@dataclass
class HarvestReport:
    """Harvested pilot powers of one slot and the resulting shortage flag."""

    p_sr_eh: float
    p_dr_eh: float
    shortage: bool


@dataclass
class EnergyLedgerEntry:
    """Residual power banked for one stored packet."""

    packet_id: int
    residual_power: float

    def __post_init__(self):
        if self.residual_power <= 0.0:
            raise ValueError("ledger entries require positive residual power; "
                             "shortage packets are never stored")


def harvest(realization_sr, realization_rd, params) -> HarvestReport:
    """Measure both pilot harvests for the slot.

    ``p_sr_eh = eta * theta * P_S * sum(h_sr^2) / d_sr^alpha`` and the
    mirror expression for the D->R pilot (channel reciprocity makes the
    D->R pilot measurement equal the R->D data channel).
    """
    p_sr = (params.eta * params.theta * params.P_S
            * channel.channel_energy(realization_sr) / realization_sr.profile.path_loss)
    p_dr = (params.eta * params.theta * params.P_D
            * channel.channel_energy(realization_rd) / realization_rd.profile.path_loss)
    return HarvestReport(p_sr_eh=p_sr, p_dr_eh=p_dr, shortage=not (p_sr > params.P_I))


def split_for_decoding(received_chips: np.ndarray, theta: float, n0_si: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Information-decoding branch: attenuate by sqrt(1-theta), add conversion noise.

    The branch output carries total noise variance ``n0_ir / 2`` per chip
    with ``n0_ir = (1 - theta) * n0_antenna + n0_si``.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError("theta must lie in [0, 1]")
    out = np.sqrt(1.0 - theta) * np.asarray(received_chips, dtype=float)
    if n0_si > 0.0:
        out = out + rng.normal(scale=np.sqrt(n0_si / 2.0), size=len(out))
    return out


def energy_shortage_probability(params) -> float:
    """Closed-form probability that the S->R harvest falls below the decoding cost.

    The summed squared tap gains of an L-path equal-power Rayleigh channel
    are Gamma(L, Omega/L) distributed, so the probability is the
    regularized lower incomplete gamma at the decoding-cost threshold.
    """
    if params.P_I < 0.0:
        raise ValueError("decoding cost must be non-negative")
    prof = params.profile_sr
    L = prof.num_paths
    denom = params.eta * params.theta * params.P_S * prof.total_power
    if denom <= 0.0:
        return 1.0 if params.P_I > 0.0 else 0.0
    x = params.P_I * L * prof.path_loss / denom
    return regularized_lower_gamma(L, x)
