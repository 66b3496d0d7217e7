"""Monte-Carlo twirl experiments and centralizer checks.

Haar measure on the group generated by a generator set is approximated by
random words: products of ``word_length`` independent ``exp(sum theta P)``
factors with uniform angles.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .qalg import StateVector, apply_matrix_inplace
from .symgates import GeneratorSet, builtin_generators, centralizer_basis, centralizer_labels, sample_symmetric_unitaries

WORD_LENGTH = 10
N_BATCHES = 10


def random_words(gens: GeneratorSet, rng: np.random.Generator, K: int, word_length: int = WORD_LENGTH) -> np.ndarray:
    """``K`` random group elements, shape ``(K, d, d)``."""
    if word_length < 1:
        raise ValueError("word_length must be >= 1")
    d = 1 << gens.support_size
    factors = sample_symmetric_unitaries(gens, rng, K * word_length).reshape(K, word_length, d, d)
    out = factors[:, 0]
    for w in range(1, word_length):
        out = factors[:, w] @ out
    return out


def _twirl_terms(M: np.ndarray, us: np.ndarray) -> np.ndarray:
    return us @ M @ us.conj().transpose(0, 2, 1)


def twirl_average(M: np.ndarray, gens: GeneratorSet, K: int, word_length: int = WORD_LENGTH,
                  seed: int = 0, chunk: int = 5000) -> np.ndarray:
    """Monte-Carlo estimate of ``E[u M u^dagger]``."""
    M = np.asarray(M, dtype=complex)
    d = 1 << gens.support_size
    if M.shape != (d, d):
        raise ValueError(f"M must be {d}x{d}")
    if K < 100:
        raise ValueError("K must be >= 100")
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(M)
    for lo in range(0, K, chunk):
        us = random_words(gens, rng, min(chunk, K - lo), word_length)
        acc += _twirl_terms(M, us).sum(axis=0)
    return acc / K


def twirl_deviation(M: np.ndarray, avg: np.ndarray) -> float:
    """Frobenius distance from ``(Tr M / N) I``."""
    n = M.shape[0]
    return float(np.linalg.norm(avg - np.trace(M) / n * np.eye(n)))


@dataclass
class ConvergenceCurve:
    Ks: list[int]
    deviations: list[float]
    slope: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["K", "frobenius_deviation"])
        for k, v in zip(self.Ks, self.deviations):
            wr.writerow([k, f"{v:.12g}"])
        return buf.getvalue()


def twirl_convergence(M: np.ndarray, gens: GeneratorSet, Ks=(100, 1000, 10000), reps: int = 5,
                      word_length: int = WORD_LENGTH, seed: int = 0) -> ConvergenceCurve:
    """Root-mean-square deviation over ``reps`` runs per K and its log-log slope."""
    devs = []
    for i, K in enumerate(Ks):
        sq = [twirl_deviation(M, twirl_average(M, gens, K, word_length, seed=seed + 1000 * i + r)) ** 2
              for r in range(reps)]
        devs.append(float(np.sqrt(np.mean(sq))))
    slope = float(np.polyfit(np.log(Ks), np.log(devs), 1)[0])
    return ConvergenceCurve(list(Ks), devs, slope)


@dataclass
class TwirlEstimate:
    mean: float
    stderr: float
    K: int


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES) -> TwirlEstimate:
    values = np.asarray(values, dtype=float)
    means = np.array([b.mean() for b in np.array_split(values, n_batches)])
    return TwirlEstimate(float(values.mean()), float(means.std(ddof=1) / np.sqrt(n_batches)), len(values))


def product_twirl_expectation(state: StateVector, O: np.ndarray, gens: GeneratorSet, K: int, seed: int = 0,
                              targets=None, word_length: int = WORD_LENGTH) -> TwirlEstimate:
    """Estimate ``E <psi| (x u_i)^dagger O (x u_i) |psi>`` over independent block twirls.

    Blocks are consecutive runs of ``gens.support_size`` qubits covering the
    state; ``O`` acts on ``targets`` (default: every qubit).
    """
    k = gens.support_size
    n = state.n
    if n % k:
        raise ValueError("state size is not a multiple of the block size")
    targets = list(range(n)) if targets is None else list(targets)
    O = np.ascontiguousarray(O, dtype=complex)
    if O.shape != (1 << len(targets),) * 2:
        raise ValueError("observable does not match its targets")
    m = n // k
    rng = np.random.default_rng(seed)
    vals = np.empty(K)
    chunk = 1000
    for lo in range(0, K, chunk):
        c = min(chunk, K - lo)
        us = random_words(gens, rng, c * m, word_length).reshape(c, m, 1 << k, 1 << k)
        for s in range(c):
            phi = state.amps.copy().reshape(-1, 1)
            for b in range(m):
                apply_matrix_inplace(phi, us[s, b], tuple(range(b * k, b * k + k)))
            ophi = phi.copy()
            apply_matrix_inplace(ophi, O, targets)
            vals[lo + s] = np.vdot(phi, ophi).real
    return batch_means(vals)


LEMMAS = (
    ("S1", "TimeReversal_T", 2, 1),
    ("S2", "Z2xZ2T", 3, 2),
    ("S3", "Z2xZ2", 2, 4),
)


@dataclass
class LemmaCheck:
    lemma: str
    symmetry: str
    support_size: int
    expected_dim: int
    computed_dim: int
    basis_labels: list[str]

    @property
    def passed(self) -> bool:
        return self.expected_dim == self.computed_dim


def lemma_centralizer_report() -> list[LemmaCheck]:
    out = []
    for lemma, sym, k, dim in LEMMAS:
        gens = builtin_generators(sym, k)
        out.append(LemmaCheck(lemma, sym, k, dim, len(centralizer_basis(gens)), centralizer_labels(gens)))
    return out


def lemma_report_json(checks: list[LemmaCheck]) -> str:
    rows = [{**asdict(c), "passed": c.passed} for c in checks]
    return json.dumps(rows, indent=1, sort_keys=True) + "\n"
