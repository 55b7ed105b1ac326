"""
Three-party private comparison over GHZ triplets.

Calvin (the third party) prepares one GHZ triplet per codeword bit, keeps the
C particles and sends the A and B particles to Alice and Bob, mixed with decoy
photons. After the decoy check every party measures in the X basis, Alice and
Bob mask their codewords with their key bits, and Calvin decodes the XOR of
everything he received to decide whether the inputs are equal.

Two variants are supported:

- ``Variant.ORIGINAL``: decoys are inserted at random positions, message
  particles keep their order.
- ``Variant.IMPROVED``: decoys are prepended and the whole sequence is
  shuffled by a secret permutation; the message order is disclosed only after
  every party reports that its measurements are done.

An `Adversary` can be attached to a run. It sees every transit, every
announcement its party is entitled to, and gets a local turn right before its
party measures.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from math import sqrt
from typing import Any, NamedTuple

import numpy as np

from .ecc import Code, as_bits, bits_to_str
from .errors import ConfigError
from .qsim import Basis, Gate, QubitPool

PARTIES = ("alice", "bob", "calvin")
DECOY_STATES = ("0", "1", "+", "-")
# stream order is part of the reproducibility contract; append, never reorder
_STREAMS = ("calvin", "alice", "bob", "channel", "nature", "adversary")


class Variant(str, enum.Enum):
    ORIGINAL = "original"
    IMPROVED = "improved"


class PermutationMode(str, enum.Enum):
    SHARED = "shared"
    INDEPENDENT = "independent"


class AnnouncementModel(str, enum.Enum):
    PUBLIC_BOARD = "public"
    PRIVATE_ORDER = "private"


class OutcomeKind(str, enum.Enum):
    EQUAL = "equal"
    NOT_EQUAL = "not_equal"
    ABORT_EAVESDROP = "abort_eavesdrop"
    ABORT_UNCORRECTABLE = "abort_uncorrectable"


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    error_rate: float | None = None

    @property
    def aborted(self) -> bool:
        return self.kind in (OutcomeKind.ABORT_EAVESDROP, OutcomeKind.ABORT_UNCORRECTABLE)


@dataclass(frozen=True)
class ProtocolConfig:
    code: Code
    variant: Variant = Variant.ORIGINAL
    r_decoy: int = 0
    noise_p: float = 0.0
    decoy_error_threshold: float | None = None
    permutation_mode: PermutationMode = PermutationMode.SHARED
    announcement_model: AnnouncementModel = AnnouncementModel.PUBLIC_BOARD
    seed: int = 0
    # pins Calvin's shuffle (positions of R||S) for both sequences; None draws it
    fixed_permutation: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "permutation_mode", PermutationMode(self.permutation_mode))
        object.__setattr__(self, "announcement_model", AnnouncementModel(self.announcement_model))
        if self.r_decoy < 0:
            raise ConfigError("r_decoy", f"must be >= 0, got {self.r_decoy}")
        if not 0.0 <= self.noise_p <= 1.0:
            raise ConfigError("noise_p", f"must lie in [0, 1], got {self.noise_p}")
        if self.decoy_error_threshold is not None and not 0.0 <= self.decoy_error_threshold <= 1.0:
            raise ConfigError("decoy_error_threshold", f"must lie in [0, 1], got {self.decoy_error_threshold}")
        if self.fixed_permutation is not None:
            size = self.r_decoy + self.code.m_code
            if sorted(self.fixed_permutation) != list(range(size)):
                raise ConfigError("fixed_permutation", f"must be a permutation of range({size})")

    @property
    def n_input(self) -> int:
        return self.code.n_word

    @property
    def m(self) -> int:
        return self.code.m_code

    @property
    def threshold(self) -> float:
        """Decoy error rate above which Calvin aborts.

        Bit-flip noise only disturbs the Z-basis half of the decoys, so the
        expected honest rate is noise_p / 2; the default allows three binomial
        standard deviations on top of that.
        """
        if self.decoy_error_threshold is not None:
            return self.decoy_error_threshold
        if self.noise_p == 0.0 or self.r_decoy == 0:
            return 0.0
        e = self.noise_p / 2
        return min(1.0, e + 3 * sqrt(e * (1 - e) / self.r_decoy))


# ---------------------------------------------------------------- sequences


@dataclass
class Slot:
    """One particle in a transmitted sequence.

    `handle` is the opaque pool label; `triplet` and `decoy_state` are
    simulator ground truth and must not be read by adversaries.
    """

    handle: int
    triplet: int | None = None
    decoy_state: str | None = None

    @property
    def is_decoy(self) -> bool:
        return self.decoy_state is not None


@dataclass
class QubitSequence:
    owner: str
    slots: list[Slot]

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def handles(self) -> list[int]:
        return [s.handle for s in self.slots]


@dataclass(frozen=True)
class Permutation:
    """Calvin's shuffle of R||S.

    `mapping[p]` is the index in the extended sequence R||S (decoys first)
    of the particle sent at position p.
    """

    mapping: tuple[int, ...]
    r: int

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError("mapping is not a bijection")

    @property
    def decoy_positions(self) -> list[int]:
        return [p for p, src in enumerate(self.mapping) if src < self.r]

    @property
    def message_positions(self) -> list[int]:
        return [p for p, src in enumerate(self.mapping) if src >= self.r]

    @property
    def message_order(self) -> list[int]:
        """Triplet index of each message particle, in transmitted order."""
        return [self.mapping[p] - self.r for p in self.message_positions]


def random_interleave(m: int, r: int, rng: np.random.Generator) -> Permutation:
    """Decoys at a uniformly random subset of positions, messages in order."""
    decoy_at = set(rng.choice(r + m, size=r, replace=False).tolist()) if r else set()
    mapping, d, k = [], 0, r
    for p in range(r + m):
        if p in decoy_at:
            mapping.append(d)
            d += 1
        else:
            mapping.append(k)
            k += 1
    return Permutation(tuple(mapping), r)


def random_permutation(m: int, r: int, rng: np.random.Generator) -> Permutation:
    return Permutation(tuple(int(v) for v in rng.permutation(r + m)), r)


# ---------------------------------------------------------------- transcript


@dataclass(frozen=True)
class Event:
    seq_no: int
    actor: str
    kind: str
    payload: dict
    audience: str = "public"

    def payload_bytes(self) -> bytes:
        body = dict(self.payload, _to=self.audience)
        return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()

    def line(self) -> str:
        return f"{self.seq_no} | {self.actor} | {self.kind} | {self.payload_bytes().hex()}"


class RoundTranscript:
    """Ordered log of one execution.

    audience is "public" for bulletin-board posts, a party name for private
    deliveries, and "local" for a party's own measurement records.
    """

    def __init__(self):
        self.events: list[Event] = []

    def log(self, actor: str, kind: str, payload: dict | None = None, audience: str = "public") -> Event:
        ev = Event(len(self.events), actor, kind, payload or {}, audience)
        self.events.append(ev)
        return ev

    def find(self, kind: str, actor: str | None = None) -> list[Event]:
        return [e for e in self.events if e.kind == kind and (actor is None or e.actor == actor)]

    def first(self, kind: str, actor: str | None = None) -> Event | None:
        hits = self.find(kind, actor)
        return hits[0] if hits else None

    def dumps(self) -> str:
        return "".join(e.line() + "\n" for e in self.events)

    @staticmethod
    def parse_line(line: str) -> tuple[int, str, str, dict]:
        seq, actor, kind, hexed = (part.strip() for part in line.split("|"))
        return int(seq), actor, kind, json.loads(bytes.fromhex(hexed))

    def __len__(self) -> int:
        return len(self.events)


def order_disclosed_before_measurement(transcript: RoundTranscript) -> bool:
    """True if any message-order announcement precedes the last measurement report."""
    done = [e.seq_no for e in transcript.find("measurement_complete")]
    last_done = max(done) if done else None
    for e in transcript.events:
        if e.kind == "announce_order" and (last_done is None or e.seq_no < last_done):
            return True
    return False


# ---------------------------------------------------------------- parties


@dataclass
class PartyState:
    name: str
    word: np.ndarray | None = None
    codeword: np.ndarray | None = None
    received: QubitSequence | None = None
    messages: list[Slot] = field(default_factory=list)
    raw_key: np.ndarray | None = None
    key: np.ndarray | None = None
    order: list[int] | None = None


class Adversary:
    """Hook interface for an attacker sitting on the quantum channel.

    `role` is the party the attacker plays ("bob" or "alice"); that party
    measures last so the adversary's local turn comes before its own
    measurement.
    """

    name = "none"
    role = "bob"

    @property
    def victim(self) -> str:
        return "alice" if self.role == "bob" else "bob"

    def on_transit(self, rnd: QPCRound, seq: QubitSequence) -> None:
        pass

    def on_announcement(self, rnd: QPCRound, event: Event) -> None:
        pass

    def before_key_measurement(self, rnd: QPCRound) -> None:
        pass

    def finish(self, rnd: QPCRound, outcome: Outcome):
        return None


class FlipOnePerBlock(Adversary):
    """Channel fault, not an attacker: one X on a random message particle per code block.

    Acts on the sequence sent to `target` and may read slot ground truth.
    """

    name = "fault"

    def __init__(self, target: str = "alice"):
        self.target = target
        self.flipped: list[int] = []

    def on_transit(self, rnd: QPCRound, seq: QubitSequence) -> None:
        if seq.owner != self.target:
            return
        code = rnd.config.code
        block = code.m_code // code.num_blocks
        rng = rnd.rng["channel"]
        by_triplet = {s.triplet: s for s in seq.slots if not s.is_decoy}
        for b in range(code.num_blocks):
            t = b * block + int(rng.integers(block))
            rnd.pool.apply(Gate.X, by_triplet[t].handle)
            self.flipped.append(t)


class RunResult(NamedTuple):
    outcome: Outcome
    transcript: RoundTranscript
    report: Any


# ---------------------------------------------------------------- operations


def mask_and_combine(x_code, y_code, k_a, k_b, k_c) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Masked announcements X'' = kA^X', Y'' = kB^Y' and Calvin's C' = kC^X''^Y''."""
    x_code = as_bits(x_code)
    m = x_code.size
    y_code, k_a, k_b, k_c = (as_bits(w, m) for w in (y_code, k_a, k_b, k_c))
    x2 = k_a ^ x_code
    y2 = k_b ^ y_code
    return x2, y2, k_c ^ x2 ^ y2


def apply_channel_noise(pool: QubitPool, seq: QubitSequence, noise_p: float, rng: np.random.Generator) -> list[int]:
    """Independent bit flip on every particle in transit; returns flipped positions."""
    if not 0.0 <= noise_p <= 1.0:
        raise ConfigError("noise_p", f"must lie in [0, 1], got {noise_p}")
    flips = rng.random(len(seq)) < noise_p
    for p in np.nonzero(flips)[0]:
        pool.apply(Gate.X, seq.slots[p].handle)
    return np.nonzero(flips)[0].tolist()


def _bits(word: np.ndarray) -> str:
    return bits_to_str(word)


class QPCRound:
    """One execution of the comparison; construct, then call `run()`."""

    def __init__(self, config: ProtocolConfig, x, y, adversary: Adversary | None = None):
        self.config = config
        n = config.n_input
        self.x = as_bits(x, n)
        self.y = as_bits(y, n)
        self.adversary = adversary or Adversary()
        if self.adversary.role not in ("alice", "bob"):
            raise ConfigError("adversary.role", f"must be alice or bob, got {self.adversary.role!r}")
        streams = np.random.SeedSequence(config.seed).spawn(len(_STREAMS))
        self.rng = {name: np.random.default_rng(s) for name, s in zip(_STREAMS, streams)}
        self.pool = QubitPool()
        self.transcript = RoundTranscript()
        self.parties = {p: PartyState(p) for p in PARTIES}
        self.permutations: dict[str, Permutation] = {}
        self.triplets: list[tuple[int, int, int]] = []
        self._next_handle = 0

    # -- helpers

    def new_qubit(self) -> int:
        h = self._next_handle
        self._next_handle += 1
        self.pool.add(h)
        return h

    def announce(self, actor: str, kind: str, payload: dict, audience: str = "public") -> Event:
        ev = self.transcript.log(actor, kind, payload, audience)
        if audience in ("public", self.adversary.role):
            self.adversary.on_announcement(self, ev)
        return ev

    def party(self, name: str) -> PartyState:
        return self.parties[name]

    # -- steps

    def encode_inputs(self) -> None:
        code = self.config.code
        self.parties["alice"].word, self.parties["bob"].word = self.x, self.y
        self.parties["alice"].codeword = code.encode(self.x)
        self.parties["bob"].codeword = code.encode(self.y)

    def prepare_ghz_triplets(self) -> list[tuple[int, int, int]]:
        for _ in range(self.config.m):
            c, a, b = self.new_qubit(), self.new_qubit(), self.new_qubit()
            self.pool.apply(Gate.H, c)
            self.pool.apply(Gate.CNOT, c, a)
            self.pool.apply(Gate.CNOT, a, b)
            self.triplets.append((c, a, b))
        return self.triplets

    def _prepare_decoy(self, state: str) -> int:
        h = self.new_qubit()
        if state in ("1", "-"):
            self.pool.apply(Gate.X, h)
        if state in ("+", "-"):
            self.pool.apply(Gate.H, h)
        return h

    def calvin_prepare_distribute(self) -> tuple[list[int], QubitSequence, QubitSequence]:
        cfg, rng = self.config, self.rng["calvin"]
        m, r = cfg.m, cfg.r_decoy
        self.prepare_ghz_triplets()
        shuffle = random_interleave if cfg.variant is Variant.ORIGINAL else random_permutation
        shared = None
        if cfg.fixed_permutation is not None:
            shared = Permutation(cfg.fixed_permutation, r)
        elif cfg.variant is Variant.IMPROVED and cfg.permutation_mode is PermutationMode.SHARED:
            shared = shuffle(m, r, rng)
        sequences = []
        for owner, role in (("alice", 1), ("bob", 2)):
            perm = shared or shuffle(m, r, rng)
            self.permutations[owner] = perm
            decoys = [str(s) for s in rng.choice(DECOY_STATES, size=r)] if r else []
            extended = [Slot(self._prepare_decoy(s), decoy_state=s) for s in decoys]
            extended += [Slot(t[role], triplet=i) for i, t in enumerate(self.triplets)]
            sequences.append(QubitSequence(owner, [extended[src] for src in perm.mapping]))
        seq_a, seq_b = sequences
        self.parties["calvin"].messages = [Slot(t[0], triplet=i) for i, t in enumerate(self.triplets)]
        return [t[0] for t in self.triplets], seq_a, seq_b

    def transmit(self, seq: QubitSequence) -> None:
        self.transcript.log("calvin", "quantum_send", {"to": seq.owner, "length": len(seq)})
        self.adversary.on_transit(self, seq)
        apply_channel_noise(self.pool, seq, self.config.noise_p, self.rng["channel"])
        self.parties[seq.owner].received = seq

    def decoy_check(self) -> Outcome | None:
        """Step 4: returns an abort outcome, or None when the check passes."""
        announcement = {}
        for owner in ("alice", "bob"):
            seq = self.parties[owner].received
            pos = [p for p, s in enumerate(seq.slots) if s.is_decoy]
            bases = ["Z" if seq.slots[p].decoy_state in "01" else "X" for p in pos]
            announcement[owner] = {"positions": pos, "bases": bases}
        self.announce("calvin", "announce_decoys", announcement)

        rates = []
        for owner in ("alice", "bob"):
            seq = self.parties[owner].received
            spec = announcement[owner]
            outcomes = [
                self.pool.measure(seq.slots[p].handle, basis, self.rng["nature"])
                for p, basis in zip(spec["positions"], spec["bases"])
            ]
            self.announce(owner, "decoy_outcomes", {"outcomes": outcomes})
            expected = [int(seq.slots[p].decoy_state in ("1", "-")) for p in spec["positions"]]
            wrong = sum(o != e for o, e in zip(outcomes, expected))
            rates.append(wrong / len(expected) if expected else 0.0)
            self.parties[owner].messages = [s for s in seq.slots if not s.is_decoy]
        rate = max(rates)
        passed = rate <= self.config.threshold
        self.announce("calvin", "decoy_verdict", {"error_rates": rates, "pass": passed})
        return None if passed else Outcome(OutcomeKind.ABORT_EAVESDROP, rate)

    def _measure_party(self, name: str) -> None:
        party = self.parties[name]
        raw = np.array(
            [self.pool.measure(s.handle, Basis.X, self.rng["nature"]) for s in party.messages], dtype=np.uint8
        )
        party.raw_key = raw
        self.transcript.log(name, "measure", {"basis": "X", "bits": _bits(raw)}, audience="local")

    def measure_keys(self) -> dict[str, np.ndarray]:
        attacker = self.adversary.role
        honest = [p for p in ("calvin", "alice", "bob") if p != attacker]
        for name in honest:
            self._measure_party(name)
        self.adversary.before_key_measurement(self)
        self._measure_party(attacker)
        for name in PARTIES:
            self.announce(name, "measurement_complete", {})

        cal = self.parties["calvin"]
        cal.key = cal.raw_key
        if self.config.variant is Variant.IMPROVED:
            orders = {owner: self.permutations[owner].message_order for owner in ("alice", "bob")}
            if self.config.announcement_model is AnnouncementModel.PUBLIC_BOARD:
                self.announce("calvin", "announce_order", {"orders": orders})
            else:
                for owner in ("alice", "bob"):
                    self.announce("calvin", "announce_order", {"orders": {owner: orders[owner]}}, audience=owner)
        for owner in ("alice", "bob"):
            party = self.parties[owner]
            party.order = self.permutations[owner].message_order
            party.key = np.zeros_like(party.raw_key)
            party.key[party.order] = party.raw_key
            if self.config.variant is Variant.IMPROVED:
                self.transcript.log(owner, "reorder", {"bits": _bits(party.key)}, audience="local")
        return {p: self.parties[p].key for p in PARTIES}

    def compare(self) -> Outcome:
        a, b, c = (self.parties[p] for p in PARTIES)
        x2, y2, c_prime = mask_and_combine(a.codeword, b.codeword, a.key, b.key, c.key)
        self.announce("alice", "announce_masked", {"bits": _bits(x2)})
        self.announce("bob", "announce_masked", {"bits": _bits(y2)})
        self.transcript.log("calvin", "combine", {"bits": _bits(c_prime)}, audience="local")
        decoded = self.config.code.decode(c_prime)
        if decoded is None:
            outcome = Outcome(OutcomeKind.ABORT_UNCORRECTABLE)
        elif decoded.word.any():
            outcome = Outcome(OutcomeKind.NOT_EQUAL)
        else:
            outcome = Outcome(OutcomeKind.EQUAL)
        return outcome

    def run(self) -> RunResult:
        self.encode_inputs()
        _, seq_a, seq_b = self.calvin_prepare_distribute()
        self.transmit(seq_a)
        self.transmit(seq_b)
        outcome = self.decoy_check()
        if outcome is None:
            self.measure_keys()
            outcome = self.compare()
        payload: dict[str, Any] = {"outcome": outcome.kind.value}
        if outcome.error_rate is not None:
            payload["error_rate"] = outcome.error_rate
        self.announce("calvin", "verdict", payload)
        report = self.adversary.finish(self, outcome)
        return RunResult(outcome, self.transcript, report)


def run(config: ProtocolConfig, x, y, adversary: Adversary | None = None) -> RunResult:
    return QPCRound(config, x, y, adversary).run()


def decoy_error_rate(transcript: RoundTranscript) -> float:
    verdict = transcript.first("decoy_verdict")
    return max(verdict.payload["error_rates"]) if verdict else 0.0


def result_record(result: RunResult) -> dict[str, Any]:
    """JSON-ready summary of a run."""
    outcome, transcript, report = result
    rec: dict[str, Any] = {
        "outcome": outcome.kind.value,
        "error_rate": outcome.error_rate if outcome.error_rate is not None else decoy_error_rate(transcript),
        "bits_recovered": None,
        "accuracy": None,
        "detected": outcome.kind is OutcomeKind.ABORT_EAVESDROP,
    }
    if report is not None:
        rec.update(report.to_record())
    return rec


def with_seed(config: ProtocolConfig, seed: int) -> ProtocolConfig:
    return replace(config, seed=seed)
