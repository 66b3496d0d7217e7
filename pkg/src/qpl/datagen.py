"""Synthetic training data: padded fixed points under symmetric TI noise.

A sample lives on ``N + 2(L_noise + 1)`` sites with the classifier window
in the middle.  Each noise layer draws one symmetric gate and repeats it on
every bond of a brick-wall row (offset ``layer mod 2``), so the state stays
translation invariant with a two-site unit cell.

States are not stored.  A dataset is its JSON descriptor; samples are
regenerated from ``(seed, sample index)`` substreams, which makes generation
order-independent and cheap to parallelize.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .fixedpoints import FixedPointKind, build_fixed_point
from .qalg import StateVector, apply_matrix_inplace
from .symgates import GeneratorSet, as_spec, builtin_generators, sample_symmetric_unitaries

LABEL_SOURCES = ("symmetric_cat", "asymmetric_product")
SVD_RTOL = 1e-12


def padded_system_size(N: int, L_noise: int) -> int:
    if N < 2 or L_noise < 0:
        raise ValueError("need N >= 2 and L_noise >= 0")
    return N + 2 * (L_noise + 1)


@dataclass
class NoiseConfig:
    L_noise: int
    genset: GeneratorSet
    unit_cell: int = 2
    first_offset: int = 0
    seed: int | None = None

    def __post_init__(self):
        if self.L_noise < 0:
            raise ValueError("L_noise must be >= 0")
        if self.unit_cell != 2:
            raise ValueError("only a two-site unit cell is supported")
        if self.first_offset not in (0, 1):
            raise ValueError("first_offset must be 0 or 1")

    @classmethod
    def for_symmetry(cls, symmetry: str, L_noise: int, support_size: int = 2, **kw) -> "NoiseConfig":
        return cls(L_noise, builtin_generators(as_spec(symmetry), support_size), **kw)

    def layer_offset(self, layer: int) -> int:
        return (self.first_offset + layer) % 2


def layer_sites(n: int, offset: int, k: int) -> list[tuple[int, ...]]:
    """Gate placements ``(2i+offset, ..., 2i+offset+k-1)`` that fit in ``n`` sites."""
    return [tuple(range(s, s + k)) for s in range(offset, n - k + 1, 2)]


def apply_noise_layers(amps: np.ndarray, n: int, cfg: NoiseConfig, gates: np.ndarray) -> None:
    """Apply pre-sampled layer gates ``gates[layer]`` to ``amps`` in place."""
    k = cfg.genset.support_size
    block = amps.reshape(-1, 1)
    for layer in range(cfg.L_noise):
        u = np.ascontiguousarray(gates[layer])
        for sites in layer_sites(n, cfg.layer_offset(layer), k):
            apply_matrix_inplace(block, u, sites)


def apply_ti_noise(state: StateVector, cfg: NoiseConfig, rng: np.random.Generator) -> StateVector:
    if state.n < 4:
        raise ValueError("noise needs at least 4 sites")
    out = state.copy()
    if cfg.L_noise:
        gates = sample_symmetric_unitaries(cfg.genset, rng, cfg.L_noise)
        apply_noise_layers(out.amps, out.n, cfg, gates)
    return out


def centered_window(n_total: int, N: int) -> tuple[int, ...]:
    left = (n_total - N) // 2
    return tuple(range(left, left + N))


@dataclass
class TrainingSample:
    state: StateVector
    label: int
    window: tuple[int, ...]
    kind: FixedPointKind | None = None


def make_sample(kind: FixedPointKind | str, N: int, cfg: NoiseConfig, rng: np.random.Generator) -> TrainingSample:
    kind = FixedPointKind(kind)
    if 2 * cfg.L_noise >= N:
        raise ValueError(f"L_noise={cfg.L_noise} violates L_noise < N/2 for N={N}")
    n = padded_system_size(N, cfg.L_noise)
    state = apply_ti_noise(build_fixed_point(kind, n), cfg, rng)
    return TrainingSample(state, kind.label, centered_window(n, N), kind)


def window_factor(amps: np.ndarray, n: int, window: Sequence[int]) -> np.ndarray:
    """Low-rank factor ``F`` with ``F F^dagger`` the window's reduced density matrix.

    The window must be contiguous; rows of ``F`` index its basis states.
    Singular values below ``SVD_RTOL * s_max`` are dropped.
    """
    window = list(window)
    N = len(window)
    left = window[0]
    if window != list(range(left, left + N)) or left + N > n:
        raise ValueError("window must be a contiguous range inside the chain")
    right = n - left - N
    m = amps.reshape(1 << left, 1 << N, 1 << right).transpose(1, 0, 2).reshape(1 << N, -1)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    r = max(1, int(np.sum(s > SVD_RTOL * s[0])))
    return np.ascontiguousarray(u[:, :r] * s[:r])


def fixed_point_kinds(label_source: str) -> dict[int, FixedPointKind]:
    if label_source not in LABEL_SOURCES:
        raise ValueError(f"label_source must be one of {LABEL_SOURCES}")
    sb = FixedPointKind.SB_cat if label_source == "symmetric_cat" else FixedPointKind.SB_product0
    return {0: FixedPointKind.Trivial_plus, 1: sb, 2: FixedPointKind.SPT_cluster}


@dataclass
class DatasetDescriptor:
    """The persisted form of a dataset: enough to regenerate it exactly."""

    size: int
    N: int
    L_noise: int
    symmetry: str
    label_source: str = "symmetric_cat"
    seed: int = 0
    support_size: int = 2

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("dataset size must be >= 1")
        if 2 * self.L_noise >= self.N:
            raise ValueError(f"L_noise={self.L_noise} violates L_noise < N/2 for N={self.N}")
        fixed_point_kinds(self.label_source)
        self.symmetry = as_spec(self.symmetry).kind

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig.for_symmetry(self.symmetry, self.L_noise, self.support_size, seed=self.seed)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DatasetDescriptor":
        return cls(**json.loads(text))


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _draw(desc: DatasetDescriptor, cfg: NoiseConfig, kinds, index: int) -> TrainingSample:
    rng = sample_rng(desc.seed, index)
    label = int(rng.integers(3))
    return make_sample(kinds[label], desc.N, cfg, rng)


def iter_dataset(desc: DatasetDescriptor, indices: Sequence[int] | None = None) -> Iterator[TrainingSample]:
    cfg = desc.noise_config()
    kinds = fixed_point_kinds(desc.label_source)
    for i in range(desc.size) if indices is None else indices:
        yield _draw(desc, cfg, kinds, i)


def make_dataset(size: int, N: int, cfg: NoiseConfig, label_source: str = "symmetric_cat",
                 seed: int = 0) -> list[TrainingSample]:
    """``size`` i.i.d. samples with uniformly random labels."""
    if size < 1:
        raise ValueError("dataset size must be >= 1")
    if 2 * cfg.L_noise >= N:
        raise ValueError(f"L_noise={cfg.L_noise} violates L_noise < N/2 for N={N}")
    kinds = fixed_point_kinds(label_source)
    desc = DatasetDescriptor(size, N, cfg.L_noise, cfg.genset.symmetry or "TimeReversal_T",
                             label_source, seed, cfg.genset.support_size)
    return [_draw(desc, cfg, kinds, i) for i in range(size)]


@dataclass
class FactorDataset:
    """Window factors of a dataset, concatenated column-wise.

    ``factors[:, offsets[b]:offsets[b+1]]`` is sample ``b``'s factor.
    """

    N: int
    labels: np.ndarray
    factors: np.ndarray
    offsets: np.ndarray
    descriptor: DatasetDescriptor | None = None

    def __len__(self) -> int:
        return len(self.labels)

    def factor(self, b: int) -> np.ndarray:
        return self.factors[:, self.offsets[b]:self.offsets[b + 1]]

    def subset(self, idx: Sequence[int]) -> "FactorDataset":
        idx = np.asarray(idx, dtype=np.int64)
        widths = self.offsets[idx + 1] - self.offsets[idx]
        cols = np.concatenate([np.arange(self.offsets[b], self.offsets[b + 1]) for b in idx])
        offsets = np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)
        return FactorDataset(self.N, self.labels[idx], np.ascontiguousarray(self.factors[:, cols]), offsets)

    @classmethod
    def from_factors(cls, N: int, labels: Sequence[int], factors: Sequence[np.ndarray],
                     descriptor: DatasetDescriptor | None = None) -> "FactorDataset":
        widths = [f.shape[1] for f in factors]
        offsets = np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)
        mat = np.ascontiguousarray(np.concatenate(factors, axis=1))
        return cls(N, np.asarray(labels, dtype=np.int64), mat, offsets, descriptor)

    @classmethod
    def from_samples(cls, samples: Sequence[TrainingSample]) -> "FactorDataset":
        N = len(samples[0].window)
        facs = [window_factor(s.state.amps, s.state.n, s.window) for s in samples]
        return cls.from_factors(N, [s.label for s in samples], facs)


def generate_factors(desc: DatasetDescriptor, threads: int = 1, chunk: int = 256) -> FactorDataset:
    """Generate and compress a dataset; the result does not depend on ``threads``."""
    cfg = desc.noise_config()
    kinds = fixed_point_kinds(desc.label_source)

    def work(lo: int) -> list[tuple[int, np.ndarray]]:
        out = []
        for i in range(lo, min(lo + chunk, desc.size)):
            s = _draw(desc, cfg, kinds, i)
            out.append((s.label, window_factor(s.state.amps, s.state.n, s.window)))
        return out

    starts = range(0, desc.size, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, starts))
    else:
        parts = [work(lo) for lo in starts]
    flat = [item for part in parts for item in part]
    return FactorDataset.from_factors(desc.N, [l for l, _ in flat], [f for _, f in flat], desc)
