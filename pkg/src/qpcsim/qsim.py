"""
Dense state-vector simulation for the small registers used by the protocol.

Conventions:
- qubit 0 is the most significant bit of the amplitude index, so the label
  |q0 q1 ... q(n-1)> lives at index sum(q_i * 2**(n-1-i))
- X-basis outcomes are encoded |+> -> 0, |-> -> 1
- gates mutate the register in place and return it, so calls can be chained

`QubitPool` keeps a set of labelled qubits split across independent registers
and only merges two registers when a two-qubit gate spans them. Measured
qubits are projected out, which keeps every register small.
"""
from __future__ import annotations

import enum
from math import sqrt
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import PreconditionError, QubitIndexError, SizeError

MAX_QUBITS = 24
NORM_ATOL = 1e-10

_SQRT2_INV = 1 / sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
_X = np.array([[0, 1], [1, 0]], dtype=complex)


class Basis(str, enum.Enum):
    Z = "Z"
    X = "X"


class Gate(str, enum.Enum):
    H = "H"
    X = "X"
    CNOT = "CNOT"

    @property
    def arity(self) -> int:
        return 2 if self is Gate.CNOT else 1


class StateVector:
    """Pure state of `num_qubits` qubits held as a complex amplitude array."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=complex).reshape(-1)
        n = int(amplitudes.size).bit_length() - 1
        if amplitudes.size != 1 << n or not 0 <= n <= MAX_QUBITS:
            raise SizeError(f"amplitude array of length {amplitudes.size} is not 2**n with n <= {MAX_QUBITS}")
        self.num_qubits = n
        self.amplitudes = amplitudes

    @classmethod
    def from_label(cls, label: str) -> StateVector:
        """Product state from a string over {0, 1, +, -}, qubit 0 first."""
        singles = {
            "0": np.array([1, 0], dtype=complex),
            "1": np.array([0, 1], dtype=complex),
            "+": np.array([1, 1], dtype=complex) * _SQRT2_INV,
            "-": np.array([1, -1], dtype=complex) * _SQRT2_INV,
        }
        amps = np.array([1], dtype=complex)
        for ch in label:
            amps = np.kron(amps, singles[ch])
        return cls(amps)

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _check_qubits(self, qubits: Sequence[int]) -> None:
        for q in qubits:
            if not isinstance(q, (int, np.integer)) or not 0 <= q < self.num_qubits:
                raise QubitIndexError(f"qubit {q} out of range for {self.num_qubits}-qubit register")
        if len(set(qubits)) != len(qubits):
            raise QubitIndexError(f"repeated qubit index in {list(qubits)}")

    def _apply_1q(self, matrix: np.ndarray, q: int) -> None:
        n = self.num_qubits
        psi = self.amplitudes.reshape([2] * n)
        psi = np.moveaxis(np.tensordot(matrix, psi, axes=([1], [q])), 0, q)
        self.amplitudes = psi.reshape(-1)

    def _apply_cnot(self, control: int, target: int) -> None:
        n = self.num_qubits
        psi = self.amplitudes.reshape([2] * n).copy()
        sel = [slice(None)] * n
        sel[control] = 1
        block = psi[tuple(sel)]
        # target axis index shifts down by one once the control axis is fixed
        t = target - 1 if target > control else target
        psi[tuple(sel)] = np.flip(block, axis=t)
        self.amplitudes = psi.reshape(-1)

    def apply(self, gate: Gate | str, *qubits: int) -> StateVector:
        gate = Gate(gate)
        if len(qubits) != gate.arity:
            raise QubitIndexError(f"{gate.value} takes {gate.arity} qubit(s), got {len(qubits)}")
        self._check_qubits(qubits)
        if gate is Gate.H:
            self._apply_1q(_H, qubits[0])
        elif gate is Gate.X:
            self._apply_1q(_X, qubits[0])
        else:
            self._apply_cnot(*qubits)
        return self

    def probabilities(self, qubit: int, basis: Basis | str = Basis.Z) -> tuple[float, float]:
        """Born-rule probabilities of reading 0 and 1 on `qubit`."""
        self._check_qubits([qubit])
        s = self
        if Basis(basis) is Basis.X:
            s = self.copy().apply(Gate.H, qubit)
        psi = s.amplitudes.reshape([2] * s.num_qubits)
        weights = np.sum(np.abs(np.moveaxis(psi, qubit, 0).reshape(2, -1)) ** 2, axis=1)
        return float(weights[0]), float(weights[1])

    def measure(self, qubit: int, basis: Basis | str, rng: np.random.Generator) -> int:
        """Projective measurement; the register collapses in place."""
        bit, collapsed = self._project(qubit, Basis(basis), rng)
        self.amplitudes = collapsed.reshape(-1)
        if Basis(basis) is Basis.X:
            self._apply_1q(_H, qubit)
        return bit

    def _project(self, qubit: int, basis: Basis, rng: np.random.Generator) -> tuple[int, np.ndarray]:
        self._check_qubits([qubit])
        src = self.copy().apply(Gate.H, qubit) if basis is Basis.X else self
        psi = src.amplitudes.reshape([2] * self.num_qubits)
        p0 = float(np.sum(np.abs(np.take(psi, 0, axis=qubit)) ** 2))
        p1 = float(np.sum(np.abs(np.take(psi, 1, axis=qubit)) ** 2))
        bit = int(rng.random() * (p0 + p1) >= p0)
        psi = psi.copy()
        sel = [slice(None)] * self.num_qubits
        sel[qubit] = 1 - bit
        psi[tuple(sel)] = 0
        psi /= sqrt(p1 if bit else p0)
        return bit, psi

    def measure_and_remove(self, qubit: int, basis: Basis | str, rng: np.random.Generator) -> tuple[int, StateVector | None]:
        """Measure `qubit` and return the state of the remaining qubits (None if nothing remains)."""
        bit, psi = self._project(qubit, Basis(basis), rng)
        if self.num_qubits == 1:
            return bit, None
        return bit, StateVector(np.take(psi, bit, axis=qubit).reshape(-1))

    def permuted(self, order: Sequence[int]) -> StateVector:
        """New register whose qubit i is this register's qubit order[i]."""
        self._check_qubits(order)
        if len(order) != self.num_qubits:
            raise QubitIndexError("permutation must list every qubit once")
        psi = self.amplitudes.reshape([2] * self.num_qubits)
        return StateVector(np.transpose(psi, list(order)).reshape(-1))

    def kron(self, other: StateVector) -> StateVector:
        if self.num_qubits + other.num_qubits > MAX_QUBITS:
            raise SizeError(f"merged register would hold {self.num_qubits + other.num_qubits} qubits")
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def __repr__(self) -> str:
        return f"StateVector(num_qubits={self.num_qubits})"


def alloc(n: int) -> StateVector:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise SizeError(f"qubit count must be in 1..{MAX_QUBITS}, got {n}")
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = 1
    return StateVector(amps)


def apply_gate(s: StateVector, gate: Gate | str, qubits: Sequence[int]) -> StateVector:
    return s.apply(gate, *qubits)


def prepare_ghz(s: StateVector, qubits: Sequence[int]) -> StateVector:
    """Turn three fresh |0> qubits into (|000> + |111>)/sqrt(2)."""
    if len(qubits) != 3:
        raise QubitIndexError("GHZ preparation needs exactly 3 qubits")
    s._check_qubits(qubits)
    for q in qubits:
        if s.probabilities(q)[1] > NORM_ATOL:
            raise PreconditionError(f"qubit {q} is not in |0>")
    a, b, c = qubits
    return s.apply(Gate.H, a).apply(Gate.CNOT, a, b).apply(Gate.CNOT, b, c)


def measure(s: StateVector, qubit: int, basis: Basis | str, rng: np.random.Generator) -> tuple[int, StateVector]:
    bit = s.measure(qubit, basis, rng)
    return bit, s


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|, insensitive to global phase."""
    if a.num_qubits != b.num_qubits:
        raise SizeError(f"cannot compare {a.num_qubits}- and {b.num_qubits}-qubit states")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes))))


class QubitPool:
    """Labelled qubits spread over independent registers, merged lazily."""

    def __init__(self, max_qubits: int = MAX_QUBITS):
        self.max_qubits = max_qubits
        self._regs: dict[int, tuple[StateVector, list[Hashable]]] = {}
        self._home: dict[Hashable, int] = {}
        self._next_id = 0

    def __contains__(self, label: Hashable) -> bool:
        return label in self._home

    @property
    def labels(self) -> list[Hashable]:
        return list(self._home)

    def register_sizes(self) -> list[int]:
        return sorted(len(labels) for _, labels in self._regs.values())

    def add(self, label: Hashable) -> None:
        if label in self._home:
            raise PreconditionError(f"qubit {label!r} already allocated")
        self._regs[self._next_id] = (alloc(1), [label])
        self._home[label] = self._next_id
        self._next_id += 1

    def _locate(self, label: Hashable) -> tuple[int, int]:
        try:
            rid = self._home[label]
        except KeyError:
            raise QubitIndexError(f"no live qubit {label!r}") from None
        return rid, self._regs[rid][1].index(label)

    def _merge(self, rid_a: int, rid_b: int) -> int:
        sa, la = self._regs.pop(rid_a)
        sb, lb = self._regs.pop(rid_b)
        if len(la) + len(lb) > self.max_qubits:
            raise SizeError(f"merging registers would need {len(la) + len(lb)} qubits (cap {self.max_qubits})")
        self._regs[rid_a] = (sa.kron(sb), la + lb)
        for lab in lb:
            self._home[lab] = rid_a
        return rid_a

    def apply(self, gate: Gate | str, *labels: Hashable) -> None:
        rids = {self._locate(lab)[0] for lab in labels}
        rid = rids.pop()
        for other in rids:
            rid = self._merge(rid, other)
        state, order = self._regs[rid]
        state.apply(gate, *[order.index(lab) for lab in labels])

    def measure(self, label: Hashable, basis: Basis | str, rng: np.random.Generator) -> int:
        """Measure and retire the qubit; its label becomes free again."""
        rid, idx = self._locate(label)
        state, order = self._regs[rid]
        bit, rest = state.measure_and_remove(idx, basis, rng)
        del self._home[label]
        if rest is None:
            del self._regs[rid]
        else:
            self._regs[rid] = (rest, order[:idx] + order[idx + 1:])
        return bit

    def discard(self, label: Hashable, rng: np.random.Generator) -> None:
        # measuring an abandoned qubit leaves the others' reduced state unchanged
        self.measure(label, Basis.Z, rng)

    def probabilities(self, label: Hashable, basis: Basis | str = Basis.Z) -> tuple[float, float]:
        rid, idx = self._locate(label)
        return self._regs[rid][0].probabilities(idx, basis)

    def state(self, labels: Iterable[Hashable]) -> StateVector:
        """Joint state of `labels` in the given order; must cover whole registers."""
        labels = list(labels)
        rids: list[int] = []
        for lab in labels:
            rid = self._locate(lab)[0]
            if rid not in rids:
                rids.append(rid)
        joint: StateVector | None = None
        joint_order: list[Hashable] = []
        for rid in rids:
            sv, order = self._regs[rid]
            joint = sv.copy() if joint is None else joint.kron(sv)
            joint_order += order
        if sorted(map(repr, joint_order)) != sorted(map(repr, labels)):
            raise PreconditionError("requested labels do not cover their registers; reduced state is mixed")
        return joint.permuted([joint_order.index(lab) for lab in labels])
