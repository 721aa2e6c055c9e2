"""System-wide parameter record shared by the simulator and the theory module."""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from dcsk_relay.channel import ChannelProfile

# 1 dBm expressed linearly (milliwatt units are used throughout; every
# expression involves only power ratios, so the unit choice is cosmetic).
ONE_DBM = 10.0 ** 0.1


def _default_profile(distance: float = 1.0, alpha: float = 3.5) -> ChannelProfile:
    return ChannelProfile.equal_power(
        num_paths=3, delays=[0, 2, 5], total_power=1.0,
        distance=distance, path_loss_exponent=alpha)


@dataclass
class SystemParams:
    """Every physical and protocol knob of the link.

    Noise convention: ``n0_sr``/``n0_rd`` are the one-sided PSDs of the
    antenna noise on each hop (per-chip Gaussian variance ``N0/2``).  The
    relay's information-decoding branch sees an effective ``n0_ir``; when
    ``n0_ir_override`` is set it is used directly (the simulation-section
    preset pins all three to the same N0), otherwise the power-splitting
    composition ``(1 - theta) * n0_sr + n0_si`` applies.
    """

    beta: int = 160                      # spreading half-length, chips
    theta: float = 0.5                   # power-splitting ratio (to harvester)
    eta: float = 0.6                     # energy conversion efficiency
    delta: float = 1.05                  # link-selection threshold
    J: int = 10                          # data-buffer capacity, packets
    P_S: float = ONE_DBM                 # source transmit power
    P_D: float | None = None             # destination pilot power (defaults to P_S)
    P_I: float = ONE_DBM / 100.0         # decoding cost at the relay
    n0_sr: float = 0.1                   # S->R antenna noise PSD
    n0_rd: float = 0.1                   # R->D antenna noise PSD
    n0_si: float | None = None           # RF-to-baseband conversion noise PSD
    n0_ir_override: float | None = None  # pin the decoder noise PSD directly
    profile_sr: ChannelProfile = field(default_factory=_default_profile)
    profile_rd: ChannelProfile = field(default_factory=_default_profile)
    packet_bits: int = 100
    slots: int = 100_000
    seed: int = 1
    warmup: int | None = None            # defaults to 10 * J
    normalize_chips: bool = True

    def __post_init__(self):
        if self.P_D is None:
            self.P_D = self.P_S
        if self.n0_si is None:
            self.n0_si = self.n0_sr
        if self.beta < 1:
            raise ValueError("beta must be at least 1")
        if self.J < 1:
            raise ValueError("buffer capacity J must be at least 1")
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError("theta must lie in [0, 1]")
        if not (0.0 <= self.eta <= 1.0):
            raise ValueError("eta must lie in [0, 1]")
        if self.delta < 0.0:
            raise ValueError("delta must be non-negative")
        if min(self.P_S, self.P_D, self.P_I) < 0.0:
            raise ValueError("powers must be non-negative")
        if min(self.n0_sr, self.n0_rd, self.n0_si) < 0.0:
            raise ValueError("noise PSDs must be non-negative")
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be at least 1")
        for name, prof in (("profile_sr", self.profile_sr), ("profile_rd", self.profile_rd)):
            tau_max = int(prof.tap_delays[-1])
            if tau_max > self.beta / 10:
                warnings.warn(f"{name}: max tap delay {tau_max} > beta/10; the "
                              "ISI-free approximation degrades", stacklevel=2)

    @property
    def d_sr(self) -> float:
        return self.profile_sr.distance

    @property
    def d_rd(self) -> float:
        return self.profile_rd.distance

    @property
    def n0_ir(self) -> float:
        """Effective noise PSD at the relay's information-decoding branch."""
        if self.n0_ir_override is not None:
            return self.n0_ir_override
        return (1.0 - self.theta) * self.n0_sr + self.n0_si

    @property
    def warmup_slots(self) -> int:
        return 10 * self.J if self.warmup is None else self.warmup

    def with_overrides(self, **kwargs) -> "SystemParams":
        return replace(self, **kwargs)


def reference_defaults(ps_over_n0_db: float = 25.0, **overrides) -> SystemParams:
    """The reference operating point used throughout the experiments.

    1 dBm transmit power on both pilots, beta=160, eta=0.6, theta=0.5,
    delta=1.05, J=10, decoding cost P_S/100, three equal-power Rayleigh
    paths (1/3 each) at chip delays 0/2/5 on both links, unit distances,
    and a single noise level N0 applied to both hops and to the decoder
    branch.  ``ps_over_n0_db`` sets N0 = P_S / 10^(dB/10).
    """
    n0 = ONE_DBM / (10.0 ** (ps_over_n0_db / 10.0))
    alpha = float(overrides.pop("alpha", 3.5))
    d_sr = float(overrides.pop("d_sr", 1.0))
    d_rd = float(overrides.pop("d_rd", 1.0))
    defaults = dict(
        beta=160, theta=0.5, eta=0.6, delta=1.05, J=10,
        P_S=ONE_DBM, P_I=ONE_DBM / 100.0,
        n0_sr=n0, n0_rd=n0, n0_ir_override=n0,
        profile_sr=_default_profile(d_sr, alpha),
        profile_rd=_default_profile(d_rd, alpha),
    )
    defaults.update(overrides)
    return SystemParams(**defaults)
