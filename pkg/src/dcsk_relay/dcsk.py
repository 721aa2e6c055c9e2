"""Differential chaos shift keying primitives.

A bit is carried by a frame of ``2*beta`` chips: a chaotic reference
half followed by a data half that is a plus/minus copy of the reference.
The receiver correlates the two halves and decides on the sign of the
correlator output, so no channel estimate is required.
"""

from dataclasses import dataclass

import numpy as np

# Fixed points of the map: constant sequences, rejected as seeds.
FIXED_POINT_SEEDS = (0.5, -1.0)
# Additional seeds that draw_reference re-rolls: 0 and 1 fall onto the
# fixed point -1 after one or two steps (measure-zero under a continuous
# draw, guarded anyway).
DEGENERATE_SEEDS = (0.5, -1.0, 0.0, 1.0)


def logistic_step(c):
    """One iterate of the logistic map ``c -> 1 - 2*c**2``.

    Accepts a scalar or an ndarray; values must lie in [-1, 1].
    """
    c = np.asarray(c, dtype=float)
    if np.any(np.abs(c) > 1.0):
        raise ValueError("logistic map input must lie in [-1, 1]")
    out = 1.0 - 2.0 * c * c
    return float(out) if out.ndim == 0 else out


def generate_chaos(seed: float, length: int) -> np.ndarray:
    """Iterate the logistic map ``length`` times starting from ``seed``.

    The returned sequence starts with the seed itself.  Seeds that are
    (or immediately fall onto) fixed points of the map produce constant
    sequences and are rejected.
    """
    if length < 0:
        raise ValueError("length must be non-negative")
    if abs(seed) > 1.0:
        raise ValueError("seed must lie in (-1, 1)")
    if seed in FIXED_POINT_SEEDS:
        raise ValueError(f"seed {seed} is a fixed point of the map")
    out = np.empty(length)
    c = float(seed)
    for k in range(length):
        out[k] = c
        c = 1.0 - 2.0 * c * c
    return out


def draw_reference(rng: np.random.Generator, beta: int, normalize: bool = True) -> np.ndarray:
    """Draw a fresh chaotic reference sequence of ``beta`` chips.

    With ``normalize`` the sequence is rescaled to half-frame energy
    ``sum(ref**2) = 1/2``, so a full frame (reference plus its copy)
    carries exactly unit energy per bit.  That is the convention under
    which the correlator SNR equals ``2 P sum(h^2) / (d^alpha N0)`` with
    no spreading-factor term, and it removes the chaotic energy
    fluctuation from the simulation.  Raw logistic iterates otherwise.
    """
    seed = rng.uniform(-1.0, 1.0)
    while seed in DEGENERATE_SEEDS:
        seed = rng.uniform(-1.0, 1.0)
    ref = generate_chaos(seed, beta)
    if normalize:
        ref *= np.sqrt(0.5 / np.dot(ref, ref))
    return ref


@dataclass
class ChaoticFrame:
    """One transmitted DCSK frame: reference chips, data chips and the bit."""

    reference: np.ndarray
    data: np.ndarray
    bit: int

    @property
    def beta(self) -> int:
        return len(self.reference)

    def chips(self) -> np.ndarray:
        """The full 2*beta chip sequence placed on the air."""
        return np.concatenate([self.reference, self.data])


@dataclass
class DecisionMetric:
    """Correlator output for one frame."""

    z: float


def modulate(bit: int, reference: np.ndarray) -> ChaoticFrame:
    """Build the frame for ``bit``: data half is ``(2*bit - 1)`` times the reference."""
    if bit not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    reference = np.asarray(reference, dtype=float)
    sign = 2 * bit - 1
    return ChaoticFrame(reference=reference, data=sign * reference, bit=bit)


def demodulate(received: np.ndarray) -> tuple[int, DecisionMetric]:
    """Correlate the two halves of a received frame and slice the bit.

    ``z = sum_k r[k] * r[k + beta]``; the estimate is 1 for ``z > 0`` and
    0 otherwise (the tie ``z == 0`` deterministically maps to 0).
    """
    received = np.asarray(received, dtype=float)
    if received.ndim != 1 or len(received) % 2 != 0:
        raise ValueError("received frame must be a flat vector of 2*beta chips")
    beta = len(received) // 2
    if beta == 0:
        raise ValueError("received frame is empty")
    z = float(np.dot(received[:beta], received[beta:]))
    if not np.isfinite(z):
        raise ValueError("correlator output is not finite")
    return (1 if z > 0.0 else 0), DecisionMetric(z=z)
