"""Test Hamiltonians on periodic rings and their low-lying spectrum.

Hamiltonians are Pauli sums assembled into a sparse matrix; the two lowest
eigenpairs come from ARPACK's Lanczos (``eigsh``) started from a fixed
vector, followed by an explicit residual check.
"""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .qalg import PauliString, StateVector

FAMILIES = {
    "CI": ("g_zxz", "g_zz", "g_x"),
    "pCI": ("g_zxz", "g_zz", "g_x"),
    "H1": ("lam",),
    "H2": ("lam",),
    "H3": ("lam",),
    "H4": ("lam", "delta"),
}
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: tuple[float, ...]
    staggered_x: float = 0.0  # H4 only: adds staggered_x * lam (1 - lam) sum (-1)^i X_i

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.params) != len(FAMILIES[self.family]):
            raise ValueError(f"{self.family} takes parameters {FAMILIES[self.family]}")
        if self.staggered_x and self.family != "H4":
            raise ValueError("staggered_x perturbation is defined for H4 only")

    def as_dict(self) -> dict:
        return dict(zip(FAMILIES[self.family], self.params))


@dataclass
class Hamiltonian:
    n_sites: int
    terms: list[tuple[float, PauliString]] = field(default_factory=list)
    periodic: bool = True

    def add(self, coef: float, ops: dict[int, str]) -> None:
        if coef != 0.0:
            wrapped = {s % self.n_sites: c for s, c in ops.items()}
            self.terms.append((float(coef), PauliString.from_sites(wrapped)))

    def to_sparse(self) -> sp.csr_matrix:
        """Sparse matrix, grouping terms by their bit-flip mask."""
        n = self.n_sites
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        groups: dict[int, np.ndarray] = defaultdict(lambda: np.zeros(dim, dtype=complex))
        for c, p in self.terms:
            x, z, ny = p.masks(n)
            # <b ^ x | P | b> = i^ny (-1)^popcount(b & z)
            sign = 1 - 2 * (np.bitwise_count(idx & z).astype(np.int64) & 1)
            groups[x] += c * p.phase * (1j ** ny) * sign
        rows, cols, vals = [], [], []
        for x, v in groups.items():
            keep = v != 0
            rows.append((idx ^ x)[keep])
            cols.append(idx[keep])
            vals.append(v[keep])
        if not rows:
            return sp.csr_matrix((dim, dim), dtype=complex)
        m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
        m.sum_duplicates()
        return m

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def energy(self, state: StateVector) -> float:
        v = state.amps
        return float(np.vdot(v, self.to_sparse() @ v).real)


def build_model(spec: ModelSpec, n_sites: int) -> Hamiltonian:
    if n_sites % 2 or not 6 <= n_sites <= 16:
        raise ValueError("n_sites must be even and in [6, 16]")
    h = Hamiltonian(n_sites)
    n = n_sites
    fam, p = spec.family, spec.params
    if fam in ("CI", "pCI"):
        g_zxz, g_zz, g_x = p
        for i in range(n):
            h.add(g_zxz, {i - 1: "Z", i: "X", i + 1: "Z"})
            h.add(-g_zz, {i: "Z", i + 1: "Z"})
            h.add(-g_x, {i: "X"})
            if fam == "pCI":
                h.add(-g_x, {i: "X", i + 1: "X"})
    elif fam in ("H1", "H2", "H3"):
        (lam,) = p
        outer, mid, field_sign = {"H1": ("Z", "X", -1), "H2": ("Z", "Y", -1), "H3": ("X", "Y", 1)}[fam]
        for i in range(n):
            h.add(1 - lam, {i - 1: outer, i: mid, i + 1: outer})
            h.add(field_sign * lam, {i: "Y"})
    else:
        lam, delta = p
        for i in range(n):
            w = (1 - lam) if i % 2 == 0 else lam
            for c, a in ((1.0, "X"), (1.0, "Y"), (delta, "Z")):
                h.add(w * c, {i: a, i + 1: a})
            if spec.staggered_x:
                h.add(spec.staggered_x * lam * (1 - lam) * (-1) ** i, {i: "X"})
    return h


class LanczosError(RuntimeError):
    pass


@dataclass
class GroundState:
    energy: float
    state: StateVector
    gap: float
    residual: float
    e1: float


def _start_vector(dim: int) -> np.ndarray:
    v = np.random.default_rng(12345).standard_normal(dim) + 0j
    return v / np.linalg.norm(v)


def lowest_eigenpairs(m: sp.spmatrix, k: int = 2, tol: float = 0.0, maxiter: int | None = None):
    dim = m.shape[0]
    if dim <= 64:
        w, v = np.linalg.eigh(m.toarray())
        return w[:k], v[:, :k]
    return _sorted(*eigsh(m, k=k, which="SA", v0=_start_vector(dim), tol=tol, maxiter=maxiter))


def _sorted(w, v):
    order = np.argsort(w)
    return w[order], v[:, order]


def ground_state(h: Hamiltonian, maxiter: int | None = None) -> GroundState:
    if h.n_sites > 16:
        raise ValueError("at most 16 sites")
    m = h.to_sparse()
    for ncv in (None, 40, 80):
        try:
            if ncv is None:
                w, v = lowest_eigenpairs(m, 2, maxiter=maxiter)
            else:
                w, v = _sorted(*eigsh(m, k=2, which="SA", v0=_start_vector(m.shape[0]), ncv=ncv, maxiter=maxiter))
        except Exception as exc:  # ARPACK non-convergence
            last = exc
            continue
        psi = v[:, 0] / np.linalg.norm(v[:, 0])
        res = float(np.linalg.norm(m @ psi - w[0] * psi))
        if res <= RESIDUAL_TOL:
            return GroundState(float(w[0]), StateVector(psi), float(w[1] - w[0]), res, float(w[1]))
        last = LanczosError(f"residual {res:.3e} above {RESIDUAL_TOL}")
    raise LanczosError(f"Lanczos did not converge: {last}")


@dataclass
class GapRow:
    family: str
    params: tuple[float, ...]
    n_sites: int
    e0: float
    e1: float

    @property
    def gap(self) -> float:
        return self.e1 - self.e0


def gap_scan(specs: Iterable[ModelSpec], n_sites_list: Sequence[int], threads: int = 1) -> list[GapRow]:
    jobs = [(s, n) for s in specs for n in n_sites_list]

    def run(job):
        s, n = job
        g = ground_state(build_model(s, n))
        return GapRow(s.family, s.params, n, g.energy, g.e1)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(run, jobs))
    return [run(j) for j in jobs]


def h4_path(lams: Iterable[float], delta: float = 1.0, staggered_x: float = 0.0) -> list[ModelSpec]:
    return [ModelSpec("H4", (lam, delta), staggered_x) for lam in lams]


@dataclass
class SweepPoint:
    spec: ModelSpec
    n_sites: int
    probs: np.ndarray
    argmax: int
    e0: float
    gap: float


def sweep_predict(specs: Iterable[ModelSpec], arch, params: np.ndarray, n_sites: int,
                  threads: int = 1) -> list[SweepPoint]:
    """Ground state on the ring for each spec, classified on sites ``0..N-1``."""
    from .qcnn import forward

    if n_sites < arch.N:
        raise ValueError("ring smaller than the QCNN window")

    def run(s: ModelSpec) -> SweepPoint:
        g = ground_state(build_model(s, n_sites))
        rec = forward(arch, params, g.state, range(arch.N))
        return SweepPoint(s, n_sites, rec.probs, rec.argmax, g.energy, g.gap)

    specs = list(specs)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(run, specs))
    return [run(s) for s in specs]


def fmt(x: float) -> str:
    return f"{x:.12g}"


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    names = sorted({k for p in points for k in FAMILIES[p.spec.family]}, key=lambda k: k)
    wr.writerow(["family", *names, "n_sites", "p00", "p01", "p10", "p11", "argmax_label", "E0", "gap"])
    for p in points:
        d = p.spec.as_dict()
        wr.writerow([p.spec.family, *(fmt(d[k]) if k in d else "" for k in names), p.n_sites,
                     *(fmt(x) for x in p.probs), p.argmax, fmt(p.e0), fmt(p.gap)])
    return buf.getvalue()


def gap_csv(rows: Sequence[GapRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["family", "params", "n_sites", "E0", "E1", "gap"])
    for r in rows:
        wr.writerow([r.family, " ".join(fmt(x) for x in r.params), r.n_sites, fmt(r.e0), fmt(r.e1), fmt(r.gap)])
    return buf.getvalue()
