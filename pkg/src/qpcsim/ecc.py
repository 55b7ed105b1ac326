"""
Binary linear block codes over GF(2).

Words are 1-D uint8 numpy arrays. A code is built from its generator matrix;
the check matrix is derived by reduction to standard form, and decoding is
plain syndrome lookup of the minimum-weight error pattern.

Text format accepted by `parse_code` / `load_code`::

    n m l
    <n rows of m space-separated bits>
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .errors import CodeError, SizeError

BitsLike = Union[str, Iterable[int], np.ndarray]


def as_bits(word: BitsLike, length: int | None = None) -> np.ndarray:
    if isinstance(word, str):
        arr = np.array([int(ch) for ch in word.replace(" ", "")], dtype=np.uint8)
    else:
        arr = np.asarray(list(word) if not isinstance(word, np.ndarray) else word, dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("bit words may only contain 0 and 1")
        arr = arr.astype(np.uint8).reshape(-1)
    if length is not None and arr.size != length:
        raise SizeError(f"expected {length} bits, got {arr.size}")
    return arr


def bits_to_str(word: np.ndarray) -> str:
    return "".join(str(int(b)) for b in word)


def int_to_bits(value: int, length: int) -> np.ndarray:
    return np.array([(value >> (length - 1 - i)) & 1 for i in range(length)], dtype=np.uint8)


def gf2_rref(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2) and the pivot columns."""
    A = (np.asarray(M, dtype=np.uint8) & 1).copy()
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(A[r:, c])[0]
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        for i in np.nonzero(A[:, c])[0]:
            if i != r:
                A[i] ^= A[r]
        pivots.append(c)
        r += 1
    return A, pivots


def gf2_rank(M: np.ndarray) -> int:
    return len(gf2_rref(M)[1])


def gf2_inv(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    R, piv = gf2_rref(np.hstack([M, np.eye(n, dtype=np.uint8)]))
    if piv[:n] != list(range(n)):
        raise CodeError("matrix is singular over GF(2)")
    return R[:, n:]


def _mul(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ B.astype(np.int64) % 2).astype(np.uint8)


@dataclass(frozen=True)
class Decoded:
    word: np.ndarray
    errors_corrected: int


class LinearCode:
    """[m, n] code with generator G (n x m), correcting up to `l_correct` flips.

    Construction validates rank(G) = n, G Q^T = 0 and that every error pattern
    of weight <= l_correct has its own nonzero syndrome; a violation raises
    CodeError.
    """

    def __init__(self, G, l_correct: int, name: str = "custom"):
        G = np.atleast_2d(np.asarray(G, dtype=np.uint8)) & 1
        n, m = G.shape
        if n < 1 or m < n:
            raise SizeError(f"generator must be n x m with 1 <= n <= m, got {n} x {m}")
        if l_correct < 0:
            raise CodeError("correction radius must be >= 0")
        R, pivots = gf2_rref(G)
        if len(pivots) != n:
            raise CodeError(f"rank(G) = {len(pivots)} < n = {n}")
        self.name = name
        self.G = G
        self.n_word = n
        self.m_code = m
        self.l_correct = l_correct
        # information set: codeword bits on these columns determine the word
        self.info_set = pivots
        self.check_positions = [c for c in range(m) if c not in pivots]
        Q = np.zeros((m - n, m), dtype=np.uint8)
        for k, c in enumerate(self.check_positions):
            Q[k, c] = 1
            Q[k, pivots] = R[:, c]
        self.Q = Q
        self._unpack = gf2_inv(G[:, pivots])
        if np.any(_mul(G, Q.T)):
            raise CodeError("G Q^T != 0")
        self.syndrome_map = self._build_syndrome_map()

    def _build_syndrome_map(self) -> dict[tuple[int, ...], np.ndarray]:
        table: dict[tuple[int, ...], np.ndarray] = {}
        for w in range(self.l_correct + 1):
            for pos in combinations(range(self.m_code), w):
                e = np.zeros(self.m_code, dtype=np.uint8)
                e[list(pos)] = 1
                key = tuple(int(b) for b in _mul(e, self.Q.T))
                if key in table:
                    raise CodeError(
                        f"error patterns {np.nonzero(table[key])[0].tolist()} and {list(pos)} share a syndrome;"
                        f" code cannot correct {self.l_correct} errors"
                    )
                table[key] = e
        return table

    @property
    def num_blocks(self) -> int:
        return 1

    def encode(self, word: BitsLike) -> np.ndarray:
        return _mul(as_bits(word, self.n_word), self.G)

    def syndrome(self, received: BitsLike) -> np.ndarray:
        return _mul(as_bits(received, self.m_code), self.Q.T)

    def decode(self, received: BitsLike) -> Decoded | None:
        """Syndrome-decode; None means the error is beyond the correction radius."""
        r = as_bits(received, self.m_code)
        e = self.syndrome_map.get(tuple(int(b) for b in self.syndrome(r)))
        if e is None:
            return None
        c = r ^ e
        return Decoded(_mul(c[self.info_set], self._unpack), int(e.sum()))

    def __repr__(self) -> str:
        return f"LinearCode({self.name}, n={self.n_word}, m={self.m_code}, l={self.l_correct})"


class BlockCode:
    """`blocks` independent copies of an inner code, concatenated.

    `l_correct` is the per-block radius: up to that many flips are corrected
    inside every block, and a block outside the radius makes the whole word
    uncorrectable.
    """

    def __init__(self, inner: LinearCode, blocks: int, name: str | None = None):
        if blocks < 1:
            raise SizeError(f"block count must be positive, got {blocks}")
        self.inner = inner
        self.blocks = blocks
        self.name = name or f"{inner.name}x{blocks}"
        self.n_word = inner.n_word * blocks
        self.m_code = inner.m_code * blocks
        self.l_correct = inner.l_correct
        self.G = np.kron(np.eye(blocks, dtype=np.uint8), inner.G).astype(np.uint8)
        self.Q = np.kron(np.eye(blocks, dtype=np.uint8), inner.Q).astype(np.uint8)
        self.syndrome_map = inner.syndrome_map

    @property
    def num_blocks(self) -> int:
        return self.blocks

    def _split(self, word: np.ndarray, size: int) -> list[np.ndarray]:
        return [word[i * size:(i + 1) * size] for i in range(self.blocks)]

    def encode(self, word: BitsLike) -> np.ndarray:
        w = as_bits(word, self.n_word)
        return np.concatenate([self.inner.encode(b) for b in self._split(w, self.inner.n_word)])

    def syndrome(self, received: BitsLike) -> np.ndarray:
        r = as_bits(received, self.m_code)
        return np.concatenate([self.inner.syndrome(b) for b in self._split(r, self.inner.m_code)])

    def decode(self, received: BitsLike) -> Decoded | None:
        r = as_bits(received, self.m_code)
        parts = []
        fixed = 0
        for b in self._split(r, self.inner.m_code):
            d = self.inner.decode(b)
            if d is None:
                return None
            parts.append(d.word)
            fixed += d.errors_corrected
        return Decoded(np.concatenate(parts), fixed)

    def __repr__(self) -> str:
        return f"BlockCode({self.name}, n={self.n_word}, m={self.m_code}, l={self.l_correct}/block)"


Code = Union[LinearCode, BlockCode]

HAMMING74_G = np.array(
    [
        [1, 0, 0, 0, 1, 1, 0],
        [0, 1, 0, 0, 1, 0, 1],
        [0, 0, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)


def identity(n: int) -> LinearCode:
    if n < 1:
        raise SizeError(f"word length must be positive, got {n}")
    return LinearCode(np.eye(n, dtype=np.uint8), 0, name=f"identity({n})")


def repetition3(n: int) -> BlockCode:
    if n < 1:
        raise SizeError(f"word length must be positive, got {n}")
    return BlockCode(LinearCode([[1, 1, 1]], 1, name="rep3"), n, name=f"repetition3({n})")


def hamming74(blocks: int = 1) -> BlockCode:
    if blocks < 1:
        raise SizeError(f"block count must be positive, got {blocks}")
    return BlockCode(LinearCode(HAMMING74_G, 1, name="hamming74"), blocks, name=f"hamming74({blocks})")


_BUILTINS = {"identity": identity, "rep3": repetition3, "repetition3": repetition3, "hamming74": hamming74}


def builtin(name: str, param: int) -> Code:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown code {name!r}; choose from {sorted(_BUILTINS)}") from None
    return factory(param)


def code_for_word_length(name: str, n: int) -> Code:
    """Built-in code of family `name` that encodes n-bit words."""
    if name == "hamming74":
        if n % 4:
            raise SizeError(f"hamming74 needs a word length divisible by 4, got {n}")
        return hamming74(n // 4)
    return builtin(name, n)


def parse_code(text: str, name: str = "custom") -> LinearCode:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 3:
        raise CodeError("first line must be 'n m l'")
    n, m, l = (int(v) for v in lines[0])
    rows = lines[1:]
    if len(rows) != n or any(len(r) != m for r in rows):
        raise SizeError(f"expected {n} rows of {m} bits")
    return LinearCode(np.array(rows, dtype=np.uint8), l, name=name)


def load_code(path: str | Path) -> LinearCode:
    path = Path(path)
    return parse_code(path.read_text(), name=path.stem)


def dump_code(code: LinearCode) -> str:
    rows = "\n".join(" ".join(str(int(b)) for b in row) for row in code.G)
    return f"{code.n_word} {code.m_code} {code.l_correct}\n{rows}\n"
