"""Deterministic MAC logic: dual-threshold detection, the two-signal
handshake, and the per-node mode state machine.

State transitions are pure functions; the simulation kernel owns the clock
and feeds events, so this module can be exhaustively model-checked on its
own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

__all__ = [
    "Mode",
    "DtdDecision",
    "RtsKind",
    "HandshakeResult",
    "NodeState",
    "ProtocolError",
    "SenseSlotResult",
    "PeerRts",
    "FrameBoundary",
    "NackReceived",
    "UndecodeDetected",
    "dtd_classify",
    "vote_from_history",
    "resolve_handshake",
    "step_node",
    "transition_table",
]


class Mode(Enum):
    CS = "CS"
    FDTS = "FDTS"
    FDTR = "FDTR"


class DtdDecision(Enum):
    IDLE = "Idle"
    PU_WEAK = "PuWeak"
    PU_STRONG = "PuStrong"


class RtsKind(Enum):
    RTS1 = "RTS1"   # vote for transmit-and-sense
    RTS2 = "RTS2"   # vote for transmit-and-receive
    NONE = "None"   # channel not sensed idle, nothing sent


class HandshakeResult(Enum):
    ENTER_FDTS = "EnterFDTS"
    ENTER_FDTR = "EnterFDTR"
    KEEP_SENSING = "KeepSensing"


class ProtocolError(RuntimeError):
    """An event was delivered in a mode where it is illegal."""


@dataclass(frozen=True)
class NodeState:
    node_id: str                       # "SU1" or "SU2"
    mode: Mode = Mode.CS
    memory: DtdDecision | None = None  # last non-idle classification
    pending_vote: RtsKind = RtsKind.NONE
    frame_phase_ns: int = 0            # node's frame grid offset within [0, T)
    is_fdts_source: bool = False


# Events ---------------------------------------------------------------

@dataclass(frozen=True)
class SenseSlotResult:
    decision: DtdDecision


@dataclass(frozen=True)
class PeerRts:
    kind: RtsKind   # NONE when nothing came back


@dataclass(frozen=True)
class FrameBoundary:
    errored: bool = False


@dataclass(frozen=True)
class NackReceived:
    pass


@dataclass(frozen=True)
class UndecodeDetected:
    pass


# Actions are (name, arg) pairs; arg is None except for send_rts.
SEND_RTS = "send_rts"
START_SENSING_SLOT = "start_sensing_slot"
START_FRAME = "start_frame"
ABORT_TRANSMISSION = "abort_transmission"
EMIT_NACK = "emit_nack"


def dtd_classify(energy: float, eps0: float, eps1: float) -> DtdDecision:
    """Partition the (normalized) detected energy axis into the three verdicts."""
    if not eps0 < eps1:
        raise ValueError("eps0 must be < eps1")
    if energy > eps1:
        return DtdDecision.PU_STRONG
    if energy > eps0:
        return DtdDecision.PU_WEAK
    return DtdDecision.IDLE


def vote_from_history(last_nonidle_decision: DtdDecision | None) -> RtsKind:
    """Mode vote issued once the current slot classified idle.

    A strong observation during the preceding busy period votes for
    bidirectional operation; a weak one for the conservative
    transmit-and-sense mode.  With no observation at all (cold start) the
    conservative vote is used.
    """
    if last_nonidle_decision is DtdDecision.IDLE:
        raise ProtocolError("vote requested with an idle decision as memory")
    if last_nonidle_decision is DtdDecision.PU_STRONG:
        return RtsKind.RTS2
    return RtsKind.RTS1


def resolve_handshake(a: RtsKind, b: RtsKind) -> HandshakeResult:
    """Combine the two nodes' votes; symmetric in its arguments."""
    if a is RtsKind.NONE or b is RtsKind.NONE:
        return HandshakeResult.KEEP_SENSING
    if a is RtsKind.RTS1 and b is RtsKind.RTS1:
        return HandshakeResult.ENTER_FDTS
    return HandshakeResult.ENTER_FDTR


def step_node(state: NodeState, event) -> tuple[NodeState, list[tuple[str, str | None]]]:
    """Advance one node's state machine; returns (new state, emitted actions).

    Raises ProtocolError on an event that is illegal in the current mode.
    """
    mode = state.mode

    if isinstance(event, SenseSlotResult):
        if mode is Mode.CS:
            if event.decision is DtdDecision.IDLE:
                vote = vote_from_history(state.memory)
                new = replace(state, pending_vote=vote)
                return new, [(SEND_RTS, vote.value)]
            new = replace(state, memory=event.decision, pending_vote=RtsKind.NONE)
            return new, [(START_SENSING_SLOT, None)]
        if mode is Mode.FDTS and state.is_fdts_source:
            if event.decision is DtdDecision.IDLE:
                return state, []
            # in-frame detection of the licensed user's return
            new = replace(
                state,
                mode=Mode.CS,
                memory=event.decision,
                pending_vote=RtsKind.NONE,
            )
            return new, [(ABORT_TRANSMISSION, None), (START_SENSING_SLOT, None)]
        raise ProtocolError(f"SenseSlotResult illegal in mode {mode.value} for {state.node_id}")

    if isinstance(event, PeerRts):
        if mode is not Mode.CS or state.pending_vote is RtsKind.NONE:
            raise ProtocolError("PeerRts outside a pending handshake")
        outcome = resolve_handshake(state.pending_vote, event.kind)
        if outcome is HandshakeResult.KEEP_SENSING:
            new = replace(state, pending_vote=RtsKind.NONE)
            return new, [(START_SENSING_SLOT, None)]
        if outcome is HandshakeResult.ENTER_FDTS:
            new = replace(
                state,
                mode=Mode.FDTS,
                pending_vote=RtsKind.NONE,
                is_fdts_source=(state.node_id == "SU1"),
            )
        else:
            new = replace(state, mode=Mode.FDTR, pending_vote=RtsKind.NONE)
        return new, [(START_FRAME, None)]

    if isinstance(event, FrameBoundary):
        if mode is Mode.CS:
            raise ProtocolError("FrameBoundary while in CS")
        if event.errored:
            new = replace(state, mode=Mode.CS, pending_vote=RtsKind.NONE)
            return new, [(EMIT_NACK, None), (ABORT_TRANSMISSION, None)]
        return state, [(START_FRAME, None)]

    if isinstance(event, UndecodeDetected):
        if mode is Mode.CS:
            raise ProtocolError("UndecodeDetected while in CS")
        new = replace(state, mode=Mode.CS, pending_vote=RtsKind.NONE)
        return new, [(EMIT_NACK, None), (ABORT_TRANSMISSION, None)]

    if isinstance(event, NackReceived):
        if mode is Mode.CS:
            raise ProtocolError("NackReceived while in CS")
        new = replace(state, mode=Mode.CS, pending_vote=RtsKind.NONE)
        return new, [(ABORT_TRANSMISSION, None)]

    raise ProtocolError(f"unknown event {event!r}")


def transition_table() -> dict:
    """Machine-readable transition table for documentation and diagnostics."""
    handshake = {
        f"({a.value},{b.value})": resolve_handshake(a, b).value
        for a in RtsKind
        for b in RtsKind
    }
    dtd = {
        "energy > eps1": DtdDecision.PU_STRONG.value,
        "eps0 < energy <= eps1": DtdDecision.PU_WEAK.value,
        "energy <= eps0": DtdDecision.IDLE.value,
    }
    rows = []
    probes = [
        (Mode.CS, SenseSlotResult(DtdDecision.IDLE), {"memory": DtdDecision.PU_WEAK}),
        (Mode.CS, SenseSlotResult(DtdDecision.PU_WEAK), {}),
        (Mode.CS, SenseSlotResult(DtdDecision.PU_STRONG), {}),
        (Mode.CS, PeerRts(RtsKind.RTS1), {"pending_vote": RtsKind.RTS1}),
        (Mode.CS, PeerRts(RtsKind.RTS2), {"pending_vote": RtsKind.RTS1}),
        (Mode.CS, PeerRts(RtsKind.NONE), {"pending_vote": RtsKind.RTS1}),
        (Mode.FDTR, FrameBoundary(False), {}),
        (Mode.FDTR, FrameBoundary(True), {}),
        (Mode.FDTR, UndecodeDetected(), {}),
        (Mode.FDTR, NackReceived(), {}),
        (Mode.FDTS, SenseSlotResult(DtdDecision.IDLE), {"is_fdts_source": True}),
        (Mode.FDTS, SenseSlotResult(DtdDecision.PU_STRONG), {"is_fdts_source": True}),
        (Mode.FDTS, FrameBoundary(False), {}),
        (Mode.FDTS, FrameBoundary(True), {}),
        (Mode.FDTS, NackReceived(), {}),
    ]
    for mode, event, extra in probes:
        st = NodeState(node_id="SU1", mode=mode, **extra)
        new, actions = step_node(st, event)
        rows.append(
            {
                "mode": mode.value,
                "event": type(event).__name__,
                "payload": _payload_repr(event),
                "next_mode": new.mode.value,
                "actions": [a if arg is None else f"{a}({arg})" for a, arg in actions],
            }
        )
    return {"dtd": dtd, "handshake": handshake, "transitions": rows}


def _payload_repr(event) -> str:
    if isinstance(event, SenseSlotResult):
        return event.decision.value
    if isinstance(event, PeerRts):
        return event.kind.value
    if isinstance(event, FrameBoundary):
        return "errored" if event.errored else "ok"
    return ""


def transition_table_json() -> str:
    return json.dumps(transition_table(), indent=2, sort_keys=True)
