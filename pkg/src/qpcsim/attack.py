"""
Adversaries for the comparison protocol.

`TwiceHCnotAttack` is a malicious participant (Bob by default) who wraps a
CNOT into a fresh ancilla between two Hadamards, first on every particle sent
to the victim and later on each of his own particles. H.CNOT.H with the
particle as control flips the ancilla iff the particle is |->, so after both
passes the ancilla holds the XOR of the two X-basis key bits at that
transmitted slot. Knowing his own bit he reads off the victim's, and unmasks
the victim's announced codeword.

`MeasureResendAttack` is the textbook baseline: measure every particle in a
random basis and resend what was seen. Decoy checks catch it.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .ecc import bits_to_str
from .errors import ProtocolViolation
from .protocol import Adversary, Event, Outcome, OutcomeKind, QPCRound, QubitSequence
from .qsim import Basis, Gate, QubitPool


class KnowledgeModel(str, enum.Enum):
    # attacker never uses a disclosed message order to realign its ancillas
    TRANSMITTED_ORDER = "faithful"
    # attacker realigns using any message order posted on the public board
    PUBLIC_ORDER = "public"


@dataclass
class AttackReport:
    attack: str
    detected: bool
    k_e: np.ndarray | None = None
    inferred_k: np.ndarray | None = None
    codeword_estimate: np.ndarray | None = None
    word_estimate: np.ndarray | None = None
    per_bit_accuracy: float | None = None
    bits_recovered: int | None = None

    def to_record(self) -> dict[str, Any]:
        return {
            "attack": self.attack,
            "detected": self.detected,
            "bits_recovered": self.bits_recovered,
            "accuracy": self.per_bit_accuracy,
            "k_e": None if self.k_e is None else bits_to_str(self.k_e),
            "word_estimate": None if self.word_estimate is None else bits_to_str(self.word_estimate),
        }


def hcnot_h(pool: QubitPool, particle, ancilla) -> None:
    """Flip `ancilla` iff `particle` is |->; the particle's X-basis state is untouched."""
    pool.apply(Gate.H, particle)
    pool.apply(Gate.CNOT, particle, ancilla)
    pool.apply(Gate.H, particle)


def phase1_intercept(pool: QubitPool, particles: Sequence, ancillas: Sequence) -> None:
    for particle, anc in zip(particles, ancillas, strict=True):
        hcnot_h(pool, particle, anc)


def discard_decoy_ancillas(
    pool: QubitPool, ancillas: list, decoy_positions: Sequence[int], rng: np.random.Generator
) -> list:
    """Drop ancillas paired with announced decoys; survivors keep transmitted order."""
    drop = set(decoy_positions)
    if any(not 0 <= p < len(ancillas) for p in drop):
        raise ProtocolViolation(f"announced decoy coordinates {sorted(drop)} exceed sequence length {len(ancillas)}")
    for p in sorted(drop):
        pool.discard(ancillas[p], rng)
    return [a for p, a in enumerate(ancillas) if p not in drop]


def phase2_local(pool: QubitPool, own: Sequence, ancillas: Sequence) -> None:
    for particle, anc in zip(own, ancillas, strict=True):
        hcnot_h(pool, particle, anc)
        pool.apply(Gate.H, anc)


class TwiceHCnotAttack(Adversary):
    name = "thcnot"

    def __init__(self, knowledge: KnowledgeModel | str = KnowledgeModel.TRANSMITTED_ORDER, role: str = "bob"):
        self.knowledge = KnowledgeModel(knowledge)
        self.role = role
        self.ancillas: list = []
        self.live: list = []
        self.public_order: list[int] | None = None
        self.masked: np.ndarray | None = None

    def on_transit(self, rnd: QPCRound, seq: QubitSequence) -> None:
        if seq.owner != self.victim:
            return
        self.ancillas = [("anc", p) for p in range(len(seq))]
        for a in self.ancillas:
            rnd.pool.add(a)
        # the attacker only keys on transmitted position, never on slot ground truth
        phase1_intercept(rnd.pool, seq.handles, self.ancillas)

    def on_announcement(self, rnd: QPCRound, event: Event) -> None:
        if event.kind == "announce_decoys":
            self.live = discard_decoy_ancillas(
                rnd.pool, self.ancillas, event.payload[self.victim]["positions"], rnd.rng["adversary"]
            )
        elif event.kind == "announce_order" and event.audience == "public":
            self.public_order = event.payload["orders"].get(self.victim)
        elif event.kind == "announce_masked" and event.actor == self.victim:
            self.masked = np.array([int(c) for c in event.payload["bits"]], dtype=np.uint8)

    def before_key_measurement(self, rnd: QPCRound) -> None:
        own = [s.handle for s in rnd.party(self.role).messages]
        phase2_local(rnd.pool, own, self.live)

    def finish(self, rnd: QPCRound, outcome: Outcome) -> AttackReport:
        if outcome.kind is OutcomeKind.ABORT_EAVESDROP:
            return AttackReport(self.name, detected=True)
        k_e = np.array([rnd.pool.measure(a, Basis.X, rnd.rng["adversary"]) for a in self.live], dtype=np.uint8)
        own_raw = rnd.party(self.role).raw_key
        by_slot = own_raw ^ k_e
        inferred = by_slot.copy()
        if self.knowledge is KnowledgeModel.PUBLIC_ORDER and self.public_order is not None:
            inferred[self.public_order] = by_slot
        code = rnd.config.code
        codeword_est = self.masked ^ inferred
        decoded = code.decode(codeword_est)
        truth = rnd.party(self.victim).key
        hits = int(np.sum(inferred == truth))
        return AttackReport(
            self.name,
            detected=False,
            k_e=k_e,
            inferred_k=inferred,
            codeword_estimate=codeword_est,
            word_estimate=None if decoded is None else decoded.word,
            per_bit_accuracy=hits / truth.size,
            bits_recovered=hits,
        )


def measure_resend(
    pool: QubitPool, handles: Sequence, rng: np.random.Generator, bases: Sequence[str] | None = None
) -> list[tuple[str, int]]:
    """Measure each particle in a random (or given) basis and re-prepare the observed state."""
    seen = []
    for i, h in enumerate(handles):
        if bases is None:
            basis = Basis.X if rng.random() < 0.5 else Basis.Z
        else:
            basis = Basis(bases[i])
        bit = pool.measure(h, basis, rng)
        pool.add(h)
        if bit:
            pool.apply(Gate.X, h)
        if basis is Basis.X:
            pool.apply(Gate.H, h)
        seen.append((basis.value, bit))
    return seen


class MeasureResendAttack(Adversary):
    name = "mr"

    def __init__(self, role: str = "bob"):
        self.role = role

    def on_transit(self, rnd: QPCRound, seq: QubitSequence) -> None:
        if seq.owner == self.victim:
            measure_resend(rnd.pool, seq.handles, rnd.rng["adversary"])

    def finish(self, rnd: QPCRound, outcome: Outcome) -> AttackReport:
        return AttackReport(self.name, detected=outcome.kind is OutcomeKind.ABORT_EAVESDROP)
