"""Fixed-point wavefunctions of the three phases on open chains."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .qalg import PauliString, StateVector, pauli_expectation

MIN_SITES, MAX_SITES = 2, 20


class FixedPointKind(str, enum.Enum):
    SB_cat = "SB_cat"
    SB_product0 = "SB_product0"
    SB_product1 = "SB_product1"
    Trivial_plus = "Trivial_plus"
    SPT_cluster = "SPT_cluster"

    @property
    def phase(self) -> str:
        if self.name.startswith("SB"):
            return "SB"
        return "Trivial" if self is FixedPointKind.Trivial_plus else "SPT"

    @property
    def label(self) -> int:
        return PHASE_LABELS[self.phase]


PHASE_LABELS = {"Trivial": 0, "SB": 1, "SPT": 2}
LABEL_NAMES = {v: k for k, v in PHASE_LABELS.items()}


def _cluster_amps(n: int, periodic: bool) -> np.ndarray:
    # H on all of |1...1>, then CZ on bonds: amplitude of |b> is
    # 2^(-n/2) (-1)^(#ones(b) + #adjacent 11 pairs); gives ZXZ = -1
    idx = np.arange(1 << n, dtype=np.int64)
    ones = np.bitwise_count(idx).astype(np.int64)
    pairs = np.bitwise_count(idx & (idx >> 1)).astype(np.int64)
    if periodic:
        pairs = pairs + ((idx >> (n - 1)) & idx & 1)
    sign = 1 - 2 * ((ones + pairs) & 1)
    return sign.astype(complex) / np.sqrt(1 << n)


def build_fixed_point(kind: FixedPointKind | str, n: int, periodic: bool = False) -> StateVector:
    """Fixed point ``kind`` on ``n`` sites.

    ``periodic`` only affects the cluster state (adds the CZ bond closing
    the ring).  The open-chain cluster state carries edge modes, so it is
    not an eigenstate of the global ``(prod X) K``; the ring is.
    """
    kind = FixedPointKind(kind)
    if not MIN_SITES <= n <= MAX_SITES:
        raise ValueError(f"n must be in [{MIN_SITES}, {MAX_SITES}], got {n}")
    dim = 1 << n
    amps = np.zeros(dim, dtype=complex)
    if kind is FixedPointKind.SB_cat:
        amps[0] = amps[-1] = 1 / np.sqrt(2)
    elif kind is FixedPointKind.SB_product0:
        amps[0] = 1
    elif kind is FixedPointKind.SB_product1:
        amps[-1] = 1
    elif kind is FixedPointKind.Trivial_plus:
        amps[:] = 1 / np.sqrt(dim)
    else:
        amps = _cluster_amps(n, periodic)
    return StateVector(amps)


def cluster_bulk_stabilizers(n: int) -> list[PauliString]:
    return [PauliString("ZXZ", (i - 1, i, i + 1)) for i in range(1, n - 1)]


def cluster_boundary_stabilizers(n: int) -> list[PauliString]:
    return [PauliString("XZ", (0, 1)), PauliString("ZX", (n - 2, n - 1))]


def time_reversal_overlap(state: StateVector) -> complex:
    """``<psi|(prod X) K|psi>``: flip every bit of ``conj(psi)``."""
    flipped = state.amps.conj()[::-1]
    return complex(np.vdot(state.amps, flipped))


@dataclass
class StabilizerCheck:
    name: str
    expected: float
    value: float

    @property
    def deviation(self) -> float:
        return abs(self.value - self.expected)


@dataclass
class StabilizerReport:
    kind: FixedPointKind
    checks: list[StabilizerCheck] = field(default_factory=list)
    tol: float = 1e-10

    @property
    def max_deviation(self) -> float:
        return max((c.deviation for c in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol

    def failures(self) -> list[StabilizerCheck]:
        return [c for c in self.checks if c.deviation > self.tol]


def verify_stabilizers(state: StateVector, kind: FixedPointKind | str, tol: float = 1e-10) -> StabilizerReport:
    """Evaluate the defining expectation values of ``kind`` on ``state``."""
    kind = FixedPointKind(kind)
    n = state.n
    report = StabilizerReport(kind, tol=tol)

    def add(p: PauliString, expected: float):
        report.checks.append(StabilizerCheck(str(p), expected, pauli_expectation(state, p)))

    if kind is FixedPointKind.SB_cat:
        for i in range(n - 1):
            add(PauliString("ZZ", (i, i + 1)), 1.0)
        add(PauliString("X" * n, tuple(range(n))), 1.0)
    elif kind is FixedPointKind.SB_product0:
        for i in range(n):
            add(PauliString("Z", (i,)), 1.0)
    elif kind is FixedPointKind.SB_product1:
        for i in range(n):
            add(PauliString("Z", (i,)), -1.0)
    elif kind is FixedPointKind.Trivial_plus:
        for i in range(n):
            add(PauliString("X", (i,)), 1.0)
    else:
        for p in cluster_bulk_stabilizers(n):
            add(p, -1.0)
    return report
