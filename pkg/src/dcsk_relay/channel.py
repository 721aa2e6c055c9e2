"""Multipath Rayleigh fading with integer chip delays, path loss and AWGN.

Fading gains are real non-negative Rayleigh magnitudes, constant within a
slot (block fading) and reciprocal: the same realization serves the pilot
measurement and the data transmission of that slot.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ChannelProfile:
    """Static description of one link's power-delay profile."""

    tap_mean_powers: np.ndarray      # E{h_l^2} per path
    tap_delays: np.ndarray           # non-negative integer chip delays
    distance: float = 1.0
    path_loss_exponent: float = 3.5

    def __post_init__(self):
        self.tap_mean_powers = np.asarray(self.tap_mean_powers, dtype=float)
        self.tap_delays = np.asarray(self.tap_delays, dtype=np.int64)
        if self.tap_mean_powers.ndim != 1 or self.tap_delays.ndim != 1:
            raise ValueError("tap vectors must be one-dimensional")
        if len(self.tap_mean_powers) != len(self.tap_delays):
            raise ValueError("tap power and delay vectors must have equal length")
        if len(self.tap_mean_powers) == 0:
            raise ValueError("profile needs at least one path")
        if np.any(self.tap_mean_powers <= 0.0):
            raise ValueError("tap mean powers must be positive")
        if np.any(self.tap_delays < 0):
            raise ValueError("tap delays must be non-negative")
        if np.any(np.diff(self.tap_delays) <= 0):
            raise ValueError("tap delays must be strictly increasing")
        if self.distance <= 0.0:
            raise ValueError("distance must be positive")

    @property
    def num_paths(self) -> int:
        return len(self.tap_mean_powers)

    @property
    def total_power(self) -> float:
        return float(np.sum(self.tap_mean_powers))

    @property
    def path_loss(self) -> float:
        return float(self.distance ** self.path_loss_exponent)

    @classmethod
    def equal_power(cls, num_paths: int, delays=None, total_power: float = 1.0,
                    distance: float = 1.0, path_loss_exponent: float = 3.5) -> "ChannelProfile":
        """Equal-power profile, the setting used throughout the analysis."""
        if delays is None:
            delays = np.arange(num_paths)
        return cls(
            tap_mean_powers=np.full(num_paths, total_power / num_paths),
            tap_delays=np.asarray(delays),
            distance=distance,
            path_loss_exponent=path_loss_exponent,
        )


@dataclass
class ChannelRealization:
    """Fading gains of one link for one slot."""

    taps: np.ndarray
    profile: ChannelProfile
    slot_index: int = 0

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=float)
        if len(self.taps) != self.profile.num_paths:
            raise ValueError("tap count does not match profile")
        if np.any(self.taps < 0.0):
            raise ValueError("fading gains are magnitudes and must be non-negative")


def draw_realization(profile: ChannelProfile, rng: np.random.Generator,
                     slot_index: int = 0) -> ChannelRealization:
    """Draw independent Rayleigh tap magnitudes with E{h_l^2} = tap_mean_powers[l]."""
    taps = rng.rayleigh(scale=np.sqrt(profile.tap_mean_powers / 2.0))
    return ChannelRealization(taps=taps, profile=profile, slot_index=slot_index)


def channel_energy(realization: ChannelRealization) -> float:
    """Instantaneous channel energy: sum of squared tap gains."""
    return float(np.dot(realization.taps, realization.taps))


def propagate(frame_chips: np.ndarray, realization: ChannelRealization,
              tx_power: float, noise_psd: float,
              rng: np.random.Generator) -> np.ndarray:
    """Send a chip vector through the faded multipath channel.

    ``y[k] = sqrt(P / d^alpha) * sum_l h_l * x[k - tau_l] + n[k]`` with
    ``n[k] ~ N(0, noise_psd / 2)``.  Chips at negative indices are zero
    (the leading edge of a frame sees no inter-frame interference, which
    is consistent with delays much shorter than the frame).
    """
    x = np.asarray(frame_chips, dtype=float)
    profile = realization.profile
    tau_max = int(profile.tap_delays[-1])
    if tau_max >= len(x):
        raise ValueError(f"maximum tap delay {tau_max} >= frame length {len(x)}")
    if tau_max > len(x) / 10:
        warnings.warn("maximum tap delay exceeds a tenth of the frame; the "
                      "ISI-free assumption is strained", stacklevel=2)
    amp = np.sqrt(tx_power / profile.path_loss)
    y = np.zeros(len(x))
    for h, tau in zip(realization.taps, profile.tap_delays):
        if tau == 0:
            y += h * x
        else:
            y[tau:] += h * x[:-tau]
    y *= amp
    if noise_psd > 0.0:
        y += rng.normal(scale=np.sqrt(noise_psd / 2.0), size=len(x))
    return y
