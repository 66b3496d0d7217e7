"""Dense statevector engine and Pauli-string algebra.

Conventions used everywhere in ``qpl``:

* qubit 0 is the leftmost site and the **most significant** bit of the
  amplitude index;
* computational basis ``Z|0> = |0>``, ``Z|1> = -|1>``;
* all arrays are complex128.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels

UNITARY_TOL = 1e-12
MAX_DENSE_QUBITS = 8

PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-site products: (a, b) -> (power of i, letter) with a.b = i**k c
_MUL = {}
for _a, _b in itertools.product("IXYZ", repeat=2):
    _m = PAULI_MATS[_a] @ PAULI_MATS[_b]
    for _c in "IXYZ":
        for _k in range(4):
            if np.allclose(_m, (1j**_k) * PAULI_MATS[_c]):
                _MUL[_a, _b] = (_k, _c)

_PHASES = (1, 1j, -1, -1j)


def _phase_power(phase) -> int:
    for k, p in enumerate(_PHASES):
        if abs(complex(phase) - p) < 1e-12:
            return k
    raise ValueError(f"phase must be one of +1, -1, +i, -i, got {phase!r}")


@dataclass(frozen=True)
class PauliString:
    """Signed Pauli operator ``phase * letters[0]_{support[0]} ...``.

    Identity letters are allowed on the support (e.g. the generator ``iI``
    on a two-site block), so ``support`` doubles as the block the operator
    is defined on.
    """

    letters: str
    support: tuple[int, ...]
    phase: complex = 1

    def __post_init__(self):
        support = tuple(int(s) for s in self.support)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "phase", _PHASES[_phase_power(self.phase)])
        if len(self.letters) != len(support):
            raise ValueError("letters and support lengths differ")
        if any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        if any(b <= a for a, b in zip(support, support[1:])) or any(s < 0 for s in support):
            raise ValueError("support must be strictly increasing non-negative indices")

    @classmethod
    def from_label(cls, label: str, start: int = 0) -> "PauliString":
        """Parse labels like ``"ZXZ"``, ``"-iZY"`` or ``"+XX"`` on consecutive sites."""
        s = label.strip()
        sign = 1
        if s[:1] in "+-":
            sign = -1 if s[0] == "-" else 1
            s = s[1:]
        ph = sign
        if s[:1] == "i":
            ph = sign * 1j
            s = s[1:]
        return cls(s, tuple(range(start, start + len(s))), ph)

    @classmethod
    def from_sites(cls, ops: dict[int, str], phase: complex = 1) -> "PauliString":
        """Build from a ``{site: letter}`` mapping."""
        sites = sorted(ops)
        return cls("".join(ops[s] for s in sites), tuple(sites), phase)

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (1, -1)

    def letter_at(self, site: int) -> str:
        try:
            return self.letters[self.support.index(site)]
        except ValueError:
            return "I"

    def shifted(self, offset: int) -> "PauliString":
        return PauliString(self.letters, tuple(s + offset for s in self.support), self.phase)

    def canonical(self) -> "PauliString":
        """Same operator with identity letters dropped from the support."""
        keep = [(s, c) for s, c in zip(self.support, self.letters) if c != "I"]
        return PauliString("".join(c for _, c in keep), tuple(s for s, _ in keep), self.phase)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        sites = sorted(set(self.support) | set(other.support))
        k = _phase_power(self.phase) + _phase_power(other.phase)
        letters = []
        for s in sites:
            dk, c = _MUL[self.letter_at(s), other.letter_at(s)]
            k += dk
            letters.append(c)
        return PauliString("".join(letters), tuple(sites), _PHASES[k % 4])

    def __neg__(self) -> "PauliString":
        return PauliString(self.letters, self.support, -self.phase)

    def __str__(self) -> str:
        ph = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}[self.phase]
        body = " ".join(f"{c}{s}" for c, s in zip(self.letters, self.support))
        return f"{ph}{body}" if body else ph

    def masks(self, n: int) -> tuple[int, int, int]:
        """Bit masks ``(x, z, n_y)`` of this string inside an ``n``-qubit register."""
        x = z = ny = 0
        for c, s in zip(self.letters, self.support):
            if s >= n:
                raise ValueError(f"site {s} outside {n}-qubit register")
            bit = 1 << (n - 1 - s)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
            ny += c == "Y"
        return x, z, ny


@dataclass
class StateVector:
    """Dense amplitude vector on ``n`` qubits (qubit 0 = most significant bit)."""

    amps: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amps, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise ValueError("amplitude count must be a power of two")
        self.amps = amps
        self.n = n

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros(1 << n, dtype=complex)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def basis(cls, bits: str) -> "StateVector":
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.amps.copy())


@dataclass
class DenseGate:
    """Unitary ``2**k x 2**k`` matrix acting on ``targets`` (first target = MSB)."""

    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self):
        self.targets = tuple(int(t) for t in self.targets)
        self.matrix = np.ascontiguousarray(self.matrix, dtype=complex)
        k = len(self.targets)
        if not 1 <= k <= MAX_DENSE_QUBITS:
            raise ValueError(f"gate arity must be 1..{MAX_DENSE_QUBITS}")
        if self.matrix.shape != (1 << k, 1 << k):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match {k} targets")

    @property
    def k(self) -> int:
        return len(self.targets)

    def unitarity_residual(self) -> float:
        u = self.matrix
        return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def apply_matrix_inplace(block: np.ndarray, matrix: np.ndarray, targets: Sequence[int]) -> None:
    """Apply ``matrix`` to the row qubits of a ``(2**n, m)`` block, in place."""
    matrix = np.ascontiguousarray(matrix, dtype=complex)
    k = len(targets)
    if k == 1:
        kernels.apply_1q(block, matrix, targets[0])
    elif k == 2:
        kernels.apply_2q(block, matrix, targets[0], targets[1])
    else:
        kernels.apply_kq(block, matrix, list(targets))


def apply_gate(state: StateVector, gate: DenseGate, check: bool = True) -> StateVector:
    """Return ``(U (x) I_rest)|psi>`` as a new state; the input is untouched."""
    tg = gate.targets
    if len(set(tg)) != len(tg):
        raise ValueError("duplicate gate targets")
    if any(not 0 <= t < state.n for t in tg):
        raise ValueError(f"gate targets {tg} out of range for {state.n} qubits")
    if check:
        res = gate.unitarity_residual()
        if res > UNITARY_TOL:
            raise ValueError(f"gate is not unitary (residual {res:.2e})")
    out = state.amps.copy().reshape(-1, 1)
    apply_matrix_inplace(out, gate.matrix, tg)
    return StateVector(out.reshape(-1))


def _pauli_action(amps: np.ndarray, n: int, p: PauliString) -> np.ndarray:
    """Return ``P|psi>`` via index permutation and sign vectors."""
    x, z, ny = p.masks(n)
    idx = np.arange(amps.size, dtype=np.int64)
    signs = 1 - 2 * (np.bitwise_count(idx & z) & 1).astype(np.int8)
    out = np.empty_like(amps)
    out[idx ^ x] = (p.phase * (1j**ny)) * signs * amps
    return out


def apply_pauli(state: StateVector, p: PauliString) -> StateVector:
    return StateVector(_pauli_action(state.amps, state.n, p))


def pauli_expectation(state: StateVector, p: PauliString) -> float:
    """``<psi|P|psi>`` for a Hermitian Pauli string."""
    if not p.is_hermitian:
        raise ValueError("pauli_expectation needs a Hermitian string (phase +-1)")
    if any(s >= state.n for s in p.support):
        raise ValueError("Pauli support out of range")
    val = np.vdot(state.amps, _pauli_action(state.amps, state.n, p))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation has imaginary residue {val.imag:.2e}")
    return float(val.real)


def readout_distribution(state: StateVector, readout: Sequence[int]) -> np.ndarray:
    """Marginal probabilities of the listed qubits (first listed = MSB of the outcome)."""
    readout = [int(q) for q in readout]
    if len(set(readout)) != len(readout):
        raise ValueError("readout qubits must be distinct")
    if any(not 0 <= q < state.n for q in readout):
        raise ValueError("readout qubit out of range")
    if len(readout) > MAX_DENSE_QUBITS:
        raise ValueError(f"at most {MAX_DENSE_QUBITS} readout qubits")
    probs = (state.amps.real**2 + state.amps.imag**2).reshape([2] * state.n)
    rest = tuple(q for q in range(state.n) if q not in readout)
    marg = probs.sum(axis=rest) if rest else probs
    # remaining axes are in increasing qubit order; permute to listed order
    order = sorted(readout)
    marg = np.transpose(marg, [order.index(q) for q in readout])
    return marg.reshape(-1)


def pauli_matrix(p: PauliString) -> np.ndarray:
    """Dense matrix of ``p`` on its own support, phase included."""
    k = len(p.support)
    if k == 0:
        raise ValueError("empty support")
    if k > MAX_DENSE_QUBITS:
        raise ValueError(f"support larger than {MAX_DENSE_QUBITS} qubits")
    m = np.array([[1.0 + 0j]])
    for c in p.letters:
        m = np.kron(m, PAULI_MATS[c])
    return p.phase * m


def pauli_gate(p: PauliString) -> DenseGate:
    return DenseGate(pauli_matrix(p), p.support)


def pauli_basis(k: int) -> tuple[list[str], np.ndarray]:
    """All ``4**k`` Pauli labels on ``k`` sites and their stacked matrices."""
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=k)]
    mats = np.array([pauli_matrix(PauliString(lab, tuple(range(k)))) for lab in labels])
    return labels, mats


def embed(matrix: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full ``2**n`` matrix of a local operator (for tests and small checks)."""
    dim = 1 << n
    out = np.eye(dim, dtype=complex)
    apply_matrix_inplace(out, np.ascontiguousarray(matrix, dtype=complex), list(targets))
    return out


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


def expectation(state: StateVector, op: np.ndarray, targets: Sequence[int]) -> complex:
    """``<psi|O|psi>`` for a dense operator on ``targets``."""
    block = state.amps.copy().reshape(-1, 1)
    apply_matrix_inplace(block, np.ascontiguousarray(op, dtype=complex), list(targets))
    return complex(np.vdot(state.amps, block.reshape(-1)))
