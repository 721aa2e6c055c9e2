"""Data-buffer state machine and per-slot link-selection protocols.

Protocol 1 forces a transmission whenever the buffer permits one: an
empty buffer forces reception (unless the harvest cannot pay the decoding
cost) and a full buffer forces forwarding.  Protocol 2 never forces
anything; when the energy comparison disfavors the only admissible link
the slot stays silent.  The SNR-based variants keep the identical tables
but compare instantaneous SNRs instead of harvested pilot powers (the
shortage test stays on harvested energy, since decoding still costs P_I).
"""

import csv
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from dcsk_relay.swipt import EnergyLedgerEntry, HarvestReport


class Action(IntEnum):
    SR_RECEIVE = 0
    RD_TRANSMIT = 1
    SILENT = 2


class Cause(IntEnum):
    BUFFER_EMPTY = 0     # forced-reception row
    BUFFER_FULL = 1      # forced-forwarding row
    ENERGY_COMPARE = 2   # interior comparison picked the link
    SHORTAGE = 3         # reception wanted but harvest below decoding cost
    REFUSAL = 4          # protocol 2 declines to force a boundary transmission


@dataclass
class LinkDecision:
    action: Action
    cause: Cause


@dataclass
class PacketRecord:
    packet_id: int
    bits: np.ndarray
    arrival_slot: int
    energy: EnergyLedgerEntry


@dataclass
class BufferState:
    """FIFO data buffer of at most J packets."""

    capacity: int
    queue: list[PacketRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("buffer capacity must be at least 1")

    @property
    def occupancy(self) -> int:
        return len(self.queue)

    @property
    def full(self) -> bool:
        return self.occupancy == self.capacity

    @property
    def empty(self) -> bool:
        return self.occupancy == 0


def decide_protocol1(buffer: BufferState, report: HarvestReport, delta: float) -> LinkDecision:
    """Forced-boundary protocol: receive when empty, forward when full."""
    if buffer.empty:
        if report.shortage:
            return LinkDecision(Action.SILENT, Cause.SHORTAGE)
        return LinkDecision(Action.SR_RECEIVE, Cause.BUFFER_EMPTY)
    if buffer.full:
        return LinkDecision(Action.RD_TRANSMIT, Cause.BUFFER_FULL)
    if report.p_sr_eh >= delta * report.p_dr_eh:
        if report.shortage:
            return LinkDecision(Action.SILENT, Cause.SHORTAGE)
        return LinkDecision(Action.SR_RECEIVE, Cause.ENERGY_COMPARE)
    return LinkDecision(Action.RD_TRANSMIT, Cause.ENERGY_COMPARE)


def decide_protocol2(buffer: BufferState, report: HarvestReport, delta: float) -> LinkDecision:
    """Non-forcing protocol: boundary states may go silent instead."""
    judge_sr = report.p_sr_eh >= delta * report.p_dr_eh
    if judge_sr:
        if buffer.full:
            return LinkDecision(Action.SILENT,
                                Cause.SHORTAGE if report.shortage else Cause.REFUSAL)
        if report.shortage:
            return LinkDecision(Action.SILENT, Cause.SHORTAGE)
        return LinkDecision(Action.SR_RECEIVE, Cause.ENERGY_COMPARE)
    if buffer.empty:
        return LinkDecision(Action.SILENT, Cause.REFUSAL)
    return LinkDecision(Action.RD_TRANSMIT, Cause.ENERGY_COMPARE)


def decide_snr_baseline(buffer: BufferState, gamma_sr: float, gamma_rd: float,
                        delta: float, variant: int, shortage: bool) -> LinkDecision:
    """Same decision tables driven by instantaneous SNRs.

    ``variant`` 1 mirrors protocol 1, 2 mirrors protocol 2.  The shortage
    flag still comes from the harvested energy: an SNR estimate does not
    pay the decoder's bill.
    """
    if variant not in (1, 2):
        raise ValueError("variant must be 1 or 2")
    report = HarvestReport(p_sr_eh=gamma_sr, p_dr_eh=gamma_rd, shortage=shortage)
    if variant == 1:
        return decide_protocol1(buffer, report, delta)
    return decide_protocol2(buffer, report, delta)


def apply_decision(buffer: BufferState, decision: LinkDecision,
                   packet_in: PacketRecord | None = None) -> BufferState:
    """Mutate the buffer according to the decision and return it.

    Appending to a full buffer or popping an empty one indicates a broken
    decision function and raises; the decide_* functions make those states
    unreachable.
    """
    if decision.action == Action.SR_RECEIVE:
        if buffer.full:
            raise RuntimeError("decision appended to a full buffer")
        if packet_in is None:
            raise ValueError("SR_RECEIVE requires the received packet")
        buffer.queue.append(packet_in)
    elif decision.action == Action.RD_TRANSMIT:
        if buffer.empty:
            raise RuntimeError("decision popped an empty buffer")
        buffer.queue.pop(0)
    return buffer


def write_decision_trace(path, rows) -> None:
    """Dump a per-slot decision trace as CSV (slot, occupancy, action, cause)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["slot", "occupancy", "action", "cause"])
        for slot, occupancy, decision in rows:
            writer.writerow([slot, occupancy, decision.action.name, decision.cause.name])
