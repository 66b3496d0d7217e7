"""QCNN ansatz: brickwork convolution levels, absorbed pooling and one FC gate.

Each level of ``n_l`` qubits runs ``conv_depth`` brickwork sublayers with
bond offsets 0, 1, 0, 1, 0 (open chain).  Pooling is absorbed into the last
sublayer; the second qubit of every offset-0 pair survives to the next
level.  Levels repeat until two qubits remain, which then share one
fully-connected two-qubit gate and are measured.

A two-qubit gate carries 15 parameters,
``U = exp(-(i/2) sum theta[4*rho + gamma - 1] O^rho (x) O^gamma)`` over
``(rho, gamma) != (0, 0)`` with ``O = (I, X, Y, Z)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from . import kernels
from .datagen import FactorDataset, window_factor
from .qalg import DenseGate, StateVector, PAULI_MATS

N_GATE_PARAMS = 15
OUTCOME_LABELS = {0: "Trivial", 1: "SB", 2: "SPT", 3: "fail"}
INIT_SIGMA = 0.1

_O = [PAULI_MATS[c] for c in "IXYZ"]
PAIR_PAULIS = np.array([np.kron(_O[r], _O[g]) for r in range(4) for g in range(4)][1:])


def param_index(rho: int, gamma: int) -> int:
    if (rho, gamma) == (0, 0):
        raise ValueError("theta_00 is fixed to zero")
    return 4 * rho + gamma - 1


@dataclass(frozen=True)
class Placement:
    slot: int
    targets: tuple[int, int]
    level: int


@dataclass(frozen=True)
class QcnnArchitecture:
    N: int
    uniform: bool
    conv_depth: int
    placements: tuple[Placement, ...]
    readout: tuple[int, int]

    @property
    def n_slots(self) -> int:
        return 1 + max(p.slot for p in self.placements)

    @property
    def n_params(self) -> int:
        return N_GATE_PARAMS * self.n_slots

    def to_dict(self) -> dict:
        return {"N": self.N, "uniform": self.uniform, "conv_depth": self.conv_depth}


SUBLAYER_OFFSETS = (0, 1, 0, 1, 0)


def build_architecture(N: int, uniform: bool = False, conv_depth: int = 3) -> QcnnArchitecture:
    if N not in (4, 8):
        raise ValueError(f"unsupported window size N={N}")
    if conv_depth not in (3, 5):
        raise ValueError(f"unsupported conv_depth={conv_depth}")
    placements: list[Placement] = []
    slot = 0
    qubits = list(range(N))
    level = 0
    while len(qubits) > 2:
        for off in SUBLAYER_OFFSETS[:conv_depth]:
            for i in range(off, len(qubits) - 1, 2):
                placements.append(Placement(slot, (qubits[i], qubits[i + 1]), level))
                if not uniform:
                    slot += 1
            if uniform:
                slot += 1
        qubits = qubits[1::2]
        level += 1
    placements.append(Placement(slot, (qubits[0], qubits[1]), level))
    return QcnnArchitecture(N, uniform, conv_depth, tuple(placements), (qubits[0], qubits[1]))


def param_count(arch: QcnnArchitecture) -> int:
    return arch.n_params


def init_params(arch: QcnnArchitecture, rng: np.random.Generator, sigma: float = INIT_SIGMA) -> np.ndarray:
    return sigma * rng.standard_normal(arch.n_params)


def _check_params(arch: QcnnArchitecture, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float).reshape(-1)
    if params.size != arch.n_params:
        raise ValueError(f"expected {arch.n_params} parameters, got {params.size}")
    return params


def gate_generator(thetas: np.ndarray) -> np.ndarray:
    """Anti-Hermitian ``-(i/2) sum theta_m O_m`` for one or many gates."""
    return -0.5j * np.tensordot(np.asarray(thetas, dtype=float), PAIR_PAULIS, axes=([-1], [0]))


def gate_matrix(thetas: Sequence[float]) -> DenseGate:
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape != (N_GATE_PARAMS,):
        raise ValueError("a two-qubit gate takes 15 parameters")
    return DenseGate(expm(gate_generator(thetas)), (0, 1))


def slot_unitaries(arch: QcnnArchitecture, params: np.ndarray) -> np.ndarray:
    th = _check_params(arch, params).reshape(arch.n_slots, N_GATE_PARAMS)
    return np.ascontiguousarray(expm(gate_generator(th)))


def slot_unitaries_and_derivatives(arch: QcnnArchitecture, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Slot gates ``U`` (S,4,4) and ``dU/dtheta_m`` (S,15,4,4).

    The derivative is the top-right block of ``expm([[A, E_m], [0, A]])``
    with ``E_m = dA/dtheta_m``; all blocks go through one batched call.
    """
    th = _check_params(arch, params).reshape(arch.n_slots, N_GATE_PARAMS)
    a = gate_generator(th)
    blocks = np.zeros((arch.n_slots, N_GATE_PARAMS, 8, 8), dtype=complex)
    blocks[:, :, :4, :4] = a[:, None]
    blocks[:, :, 4:, 4:] = a[:, None]
    blocks[:, :, :4, 4:] = -0.5j * PAIR_PAULIS[None]
    ex = expm(blocks)
    return np.ascontiguousarray(ex[:, 0, :4, :4]), np.ascontiguousarray(ex[:, :, :4, 4:])


def apply_circuit(block: np.ndarray, arch: QcnnArchitecture, us: np.ndarray, offset: int = 0) -> None:
    """Apply all placements in order to rows ``offset..offset+N-1`` of ``block``."""
    for p in arch.placements:
        kernels.apply_2q(block, us[p.slot], p.targets[0] + offset, p.targets[1] + offset)


def outcome_of_rows(arch: QcnnArchitecture) -> np.ndarray:
    """Readout outcome ``2*b(r0) + b(r1)`` for every window basis row."""
    rows = np.arange(1 << arch.N)
    r0, r1 = arch.readout
    b0 = (rows >> (arch.N - 1 - r0)) & 1
    b1 = (rows >> (arch.N - 1 - r1)) & 1
    return (2 * b0 + b1).astype(np.int64)


def grouping_matrix(arch: QcnnArchitecture) -> np.ndarray:
    g = np.zeros((4, 1 << arch.N))
    g[outcome_of_rows(arch), np.arange(1 << arch.N)] = 1.0
    return g


@dataclass
class PredictionRecord:
    probs: np.ndarray
    label_map: dict = field(default_factory=lambda: dict(zip(["00", "01", "10", "11"], OUTCOME_LABELS.values())))

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    @property
    def label(self) -> str:
        return OUTCOME_LABELS[self.argmax]


def forward(arch: QcnnArchitecture, params: np.ndarray, state: StateVector,
            window: Sequence[int] | None = None) -> PredictionRecord:
    """Readout distribution of the circuit acting on ``window`` of ``state``."""
    window = tuple(range(arch.N)) if window is None else tuple(window)
    if len(window) != arch.N:
        raise ValueError(f"window has {len(window)} qubits, architecture needs {arch.N}")
    if window != tuple(range(window[0], window[0] + arch.N)):
        raise ValueError("window must be contiguous")
    if window[-1] >= state.n:
        raise ValueError("window exceeds the state")
    us = slot_unitaries(arch, params)
    block = state.amps.copy().reshape(-1, 1)
    apply_circuit(block, arch, us, window[0])
    probs = np.abs(block.reshape(-1)) ** 2
    shape = [2] * state.n
    r0, r1 = (window[0] + q for q in arch.readout)
    rest = tuple(q for q in range(state.n) if q not in (r0, r1))
    marg = probs.reshape(shape).sum(axis=rest)
    return PredictionRecord(marg.reshape(-1))


def factor_probs(arch: QcnnArchitecture, psi: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """``(B, 4)`` readout probabilities of an evolved factor block."""
    w = psi.real ** 2 + psi.imag ** 2
    per_sample = np.add.reduceat(w, offsets[:-1], axis=1)
    return (grouping_matrix(arch) @ per_sample).T


def forward_factors(arch: QcnnArchitecture, params: np.ndarray, data: FactorDataset,
                    chunk: int = 2000) -> np.ndarray:
    """Readout probabilities for every sample of a factor dataset."""
    if data.N != arch.N:
        raise ValueError(f"dataset window N={data.N} does not match architecture N={arch.N}")
    us = slot_unitaries(arch, params)
    out = []
    for lo in range(0, len(data), chunk):
        sub = data.subset(range(lo, min(lo + chunk, len(data))))
        psi = sub.factors.copy()
        apply_circuit(psi, arch, us)
        out.append(factor_probs(arch, psi, sub.offsets))
    return np.concatenate(out, axis=0)


def forward_factor(arch: QcnnArchitecture, params: np.ndarray, state: StateVector,
                   window: Sequence[int]) -> PredictionRecord:
    """As :func:`forward`, through the compressed window factor."""
    f = window_factor(state.amps, state.n, window)
    data = FactorDataset.from_factors(arch.N, [0], [f])
    return PredictionRecord(forward_factors(arch, params, data)[0])


def save_checkpoint(path, arch: QcnnArchitecture, params: np.ndarray, meta: dict | None = None) -> None:
    doc = {"arch": arch.to_dict(), "params": [float(x) for x in _check_params(arch, params)], "meta": meta or {}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> tuple[QcnnArchitecture, np.ndarray, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    a = doc["arch"]
    arch = build_architecture(int(a["N"]), bool(a["uniform"]), int(a["conv_depth"]))
    return arch, _check_params(arch, doc["params"]), doc.get("meta", {})
