"""Conventional observables used to cross-check classifier output."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .datagen import centered_window, layer_sites, padded_system_size, sample_rng
from .fixedpoints import build_fixed_point
from .qalg import PauliString, StateVector, apply_matrix_inplace, pauli_expectation
from .symgates import GeneratorSet, sample_symmetric_unitaries

# projector onto (|01> + |10>)/sqrt(2)
R_OP = np.zeros((4, 4), dtype=complex)
R_OP[1:3, 1:3] = 0.5
SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]
STRING_LENGTH = 8


def _check_range(state: StateVector, sites) -> None:
    if min(sites) < 0 or max(sites) >= state.n:
        raise ValueError(f"sites {min(sites)}..{max(sites)} outside the {state.n}-site state")


def string_operator(i: int, j: int) -> PauliString:
    if j - i < 3:
        raise ValueError("string needs j - i >= 3")
    return PauliString("ZY" + "X" * (j - i - 3) + "YZ", tuple(range(i, j + 1)))


def string_order(state: StateVector, i: int, j: int) -> float:
    """``<Z_i Y_{i+1} X ... X Y_{j-1} Z_j>``."""
    p = string_operator(i, j)
    _check_range(state, p.support)
    return pauli_expectation(state, p)


@dataclass(frozen=True)
class RegionPair:
    """Adjacent blocks ``A = [start, start+L/2)`` and ``B = [start+L/2, start+L)``."""

    start: int
    L: int

    def __post_init__(self):
        if self.L <= 0 or self.L % 4:
            raise ValueError("L must be a positive multiple of 4")
        if self.start < 0:
            raise ValueError("start must be >= 0")

    @property
    def A(self) -> tuple[int, ...]:
        return tuple(range(self.start, self.start + self.L // 2))

    @property
    def B(self) -> tuple[int, ...]:
        return tuple(range(self.start + self.L // 2, self.start + self.L))

    def pair_ops(self) -> list[tuple[np.ndarray, int, int]]:
        """SWAP on the outer L/4 pairs ``(A_k, B_k)``, R on the inner L/4 pairs."""
        half, quarter = self.L // 2, self.L // 4
        return [(R_OP if k >= quarter else SWAP, self.A[k], self.B[k]) for k in range(half)]


def ti_operator_dense(regions: RegionPair) -> np.ndarray:
    """Dense matrix of the operator on its ``L`` sites (for small checks)."""
    dim = 1 << regions.L
    out = np.eye(dim, dtype=complex)
    for op, a, b in regions.pair_ops():
        kernels.apply_2q(out, op, a - regions.start, b - regions.start)
    return out


def ti_order_parameter(state: StateVector, regions: RegionPair) -> float:
    """Expectation of the R/SWAP operator; unit operator norm by construction."""
    _check_range(state, regions.A + regions.B)
    block = state.amps.copy().reshape(-1, 1)
    for op, a, b in regions.pair_ops():
        kernels.apply_2q(block, op, a, b)
    return float(np.vdot(state.amps, block.reshape(-1)).real)


def sb_correlator(state: StateVector, i: int, distance: int, staggered: bool = False) -> float:
    """``<Z_i Z_{i+d}>``, times ``(-1)^d`` when ``staggered``."""
    if distance < 1:
        raise ValueError("distance must be >= 1")
    j = i + distance
    _check_range(state, (i, j))
    val = pauli_expectation(state, PauliString("ZZ", (i, j)))
    return val * (-1) ** distance if staggered else val


def _noisy_cluster_string(gens: GeneratorSet, L_noise: int, rng: np.random.Generator) -> float:
    n = padded_system_size(STRING_LENGTH, L_noise)
    st = build_fixed_point("SPT_cluster", n)
    block = st.amps.reshape(-1, 1)
    k = gens.support_size
    for layer in range(L_noise):
        sites = layer_sites(n, layer % 2, k)
        gates = sample_symmetric_unitaries(gens, rng, len(sites))
        for u, s in zip(gates, sites):
            apply_matrix_inplace(block, u, s)
    w = centered_window(n, STRING_LENGTH)
    return string_order(st, w[0], w[-1])


def noisy_string_histogram(n_samples: int, L_noise: int, genset: GeneratorSet, seed: int,
                           threads: int = 1) -> np.ndarray:
    """Length-8 string order on cluster states under independent per-bond symmetric noise."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")

    def one(i: int) -> float:
        return _noisy_cluster_string(genset, L_noise, sample_rng(seed, i))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return np.array(list(ex.map(one, range(n_samples))))
    return np.array([one(i) for i in range(n_samples)])


def histogram_csv(values: np.ndarray) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["sample_index", "value"])
    for i, v in enumerate(values):
        wr.writerow([i, f"{v:.12g}"])
    return buf.getvalue()
