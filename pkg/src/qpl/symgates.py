"""Symmetry representations and symmetric local unitaries.

A symmetry group is stored as a list of on-site elements ``(u(g), K?)``:
``u(g)`` is a string of ``X`` flips (on all sites, the even sites or the odd
sites of a block) and the flag says whether complex conjugation ``K`` in
the computational basis follows.  A generator ``A`` (anti-Hermitian) is
symmetric under a unitary element when ``u A = A u`` and under an
antiunitary one when ``u A* = A u``; the same conditions apply to gates.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .qalg import DenseGate, PauliString, pauli_basis, pauli_matrix

NULL_CUTOFF = 1e-9
SYMMETRY_TOL = 1e-12

KINDS = ("TimeReversal_T", "Z2xZ2T", "Z2xZ2")
_ALIASES = {
    "t": "TimeReversal_T",
    "tr": "TimeReversal_T",
    "timereversal": "TimeReversal_T",
    "timereversal_t": "TimeReversal_T",
    "z2xz2t": "Z2xZ2T",
    "z2z2t": "Z2xZ2T",
    "z2xz2": "Z2xZ2",
    "z2z2": "Z2xZ2",
}


@dataclass(frozen=True)
class GroupElement:
    name: str
    flips: str  # "none" | "all" | "even" | "odd"
    antiunitary: bool

    def flip_sites(self, k: int) -> list[int]:
        if self.flips == "all":
            return list(range(k))
        if self.flips == "even":
            return list(range(0, k, 2))
        if self.flips == "odd":
            return list(range(1, k, 2))
        return []

    def unitary_part(self, k: int) -> PauliString:
        flipped = set(self.flip_sites(k))
        return PauliString("".join("X" if s in flipped else "I" for s in range(k)), tuple(range(k)))

    def matrix(self, k: int) -> np.ndarray:
        return pauli_matrix(self.unitary_part(k))


_FLIP_XOR = {
    frozenset(): "none",
    frozenset({"even"}): "even",
    frozenset({"odd"}): "odd",
    frozenset({"even", "odd"}): "all",
}


def _flip_set(f: str) -> frozenset:
    return {"none": frozenset(), "all": frozenset({"even", "odd"}),
            "even": frozenset({"even"}), "odd": frozenset({"odd"})}[f]


@dataclass(frozen=True)
class SymmetrySpec:
    kind: str
    elements: tuple[GroupElement, ...] = field(init=False)

    def __post_init__(self):
        kind = _ALIASES.get(self.kind.lower(), self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown symmetry kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "TimeReversal_T":
            els = (GroupElement("1", "none", False), GroupElement("(PX)K", "all", True))
        elif kind == "Z2xZ2T":
            els = (
                GroupElement("1", "none", False),
                GroupElement("PX", "all", False),
                GroupElement("K", "none", True),
                GroupElement("(PX)K", "all", True),
            )
        else:
            els = (
                GroupElement("1", "none", False),
                GroupElement("PX_even", "even", False),
                GroupElement("PX_odd", "odd", False),
                GroupElement("PX", "all", False),
            )
        object.__setattr__(self, "elements", els)

    @property
    def order(self) -> int:
        return len(self.elements)

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        # X strings are real, so (u1 K^s1)(u2 K^s2) = u1 u2 K^(s1 xor s2)
        flips = _FLIP_XOR[_flip_set(a.flips) ^ _flip_set(b.flips)]
        anti = a.antiunitary != b.antiunitary
        for el in self.elements:
            if el.flips == flips and el.antiunitary == anti:
                return el
        raise ArithmeticError(f"{a.name}*{b.name} is not in the group")

    def multiplication_table(self) -> list[list[str]]:
        return [[self.multiply(a, b).name for b in self.elements] for a in self.elements]

    def check_group_axioms(self) -> bool:
        identity = [e for e in self.elements if e.flips == "none" and not e.antiunitary]
        if len(identity) != 1:
            return False
        e = identity[0]
        for a in self.elements:
            if self.multiply(a, e) != a or self.multiply(e, a) != a:
                return False
            if not any(self.multiply(a, b) == e for b in self.elements):
                return False
        for a, b, c in itertools.product(self.elements, repeat=3):
            if self.multiply(self.multiply(a, b), c) != self.multiply(a, self.multiply(b, c)):
                return False
        return True


def as_spec(spec: SymmetrySpec | str) -> SymmetrySpec:
    return spec if isinstance(spec, SymmetrySpec) else SymmetrySpec(spec)


def symmetry_residual(op: np.ndarray, spec: SymmetrySpec | str) -> float:
    """Largest violation of the symmetry condition over all group elements."""
    spec = as_spec(spec)
    op = np.asarray(op, dtype=complex)
    k = op.shape[0].bit_length() - 1
    worst = 0.0
    for el in spec.elements:
        u = el.matrix(k)
        lhs = u @ (op.conj() if el.antiunitary else op)
        worst = max(worst, float(np.abs(lhs - op @ u).max()))
    return worst


def symmetric_check(op: np.ndarray, spec: SymmetrySpec | str, tol: float = SYMMETRY_TOL) -> bool:
    return symmetry_residual(op, spec) <= tol


@dataclass(frozen=True)
class GeneratorSet:
    """Anti-Hermitian Pauli generators of a symmetric local unitary group."""

    support_size: int
    gens: tuple[PauliString, ...]
    symmetry: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "gens", tuple(self.gens))
        for g in self.gens:
            if g.phase not in (1j, -1j):
                raise ValueError(f"generator {g} is not anti-Hermitian")
            if len(g.support) != self.support_size:
                raise ValueError(f"generator {g} not defined on a {self.support_size}-site block")
        if self.gens:
            flat = self.matrices().reshape(len(self.gens), -1)
            real = np.concatenate([flat.real, flat.imag], axis=1)
            if np.linalg.matrix_rank(real, tol=1e-9) != len(self.gens):
                raise ValueError("generators are linearly dependent")
        if self.symmetry is not None:
            object.__setattr__(self, "symmetry", as_spec(self.symmetry).kind)

    def __len__(self) -> int:
        return len(self.gens)

    def matrices(self) -> np.ndarray:
        return np.array([pauli_matrix(g) for g in self.gens])

    def labels(self) -> list[str]:
        return ["".join(g.letters) for g in self.gens]


def _gens_from_labels(labels: Iterable[str], k: int, kind: str) -> GeneratorSet:
    return GeneratorSet(k, tuple(PauliString(lab, tuple(range(k)), 1j) for lab in labels), kind)


def _symmetric_pauli_labels(spec: SymmetrySpec, k: int) -> list[str]:
    labels, mats = pauli_basis(k)
    return [lab for lab, m in zip(labels, mats) if symmetric_check(1j * m, spec)]


def builtin_generators(spec: SymmetrySpec | str, support_size: int) -> GeneratorSet:
    """The generator sets used for noise gates, as written down for each symmetry."""
    spec = as_spec(spec)
    key = (spec.kind, support_size)
    if key == ("TimeReversal_T", 2):
        return _gens_from_labels(["ZI", "IZ", "ZY", "YZ", "ZX", "XZ"], 2, spec.kind)
    if key == ("Z2xZ2T", 2):
        return _gens_from_labels(["ZY", "YZ"], 2, spec.kind)
    if key == ("Z2xZ2T", 3):
        return _gens_from_labels(_symmetric_pauli_labels(spec, 3), 3, spec.kind)
    if key == ("Z2xZ2", 2):
        return _gens_from_labels(["II", "XI", "IX", "XX"], 2, spec.kind)
    raise ValueError(f"no built-in generators for {key}")


def _nullspace(mat: np.ndarray, cutoff: float = NULL_CUTOFF) -> np.ndarray:
    """Orthonormal basis (columns) of the nullspace of ``mat`` via SVD."""
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def solve_symmetric_generators(spec: SymmetrySpec | str, support_size: int) -> GeneratorSet:
    """Symmetric anti-Hermitian generators from the linear symmetry constraints.

    Real coefficients ``c_m`` on the basis ``i P_m`` must satisfy
    ``[u, sum c_m iP_m] = 0`` (unitary elements) or
    ``u (sum c_m iP_m)* = (sum c_m iP_m) u`` (antiunitary elements).
    """
    spec = as_spec(spec)
    k = support_size
    if not 1 <= k <= 4:
        raise ValueError("support_size must be 1..4")
    labels, mats = pauli_basis(k)
    basis = 1j * mats
    blocks = []
    for el in spec.elements:
        u = el.matrix(k)
        src = basis.conj() if el.antiunitary else basis
        cons = (u @ src - basis @ u).reshape(len(labels), -1).T
        blocks += [cons.real, cons.imag]
    null = _nullspace(np.concatenate(blocks, axis=0))
    diag = np.einsum("ij,ij->i", null, null.conj()).real
    picked = [lab for lab, d in zip(labels, diag) if d > 1 - 1e-9]
    if len(picked) != null.shape[1]:
        raise ArithmeticError("symmetric subspace is not spanned by single Pauli strings")
    return _gens_from_labels(picked, k, spec.kind)


def twirl_generator(p: PauliString | np.ndarray, spec: SymmetrySpec | str) -> np.ndarray:
    """Group average ``(1/|G|) sum_g u(g) o^(*) u(g)^dagger`` of a local operator."""
    spec = as_spec(spec)
    o = pauli_matrix(p) if isinstance(p, PauliString) else np.asarray(p, dtype=complex)
    k = o.shape[0].bit_length() - 1
    acc = np.zeros_like(o)
    for el in spec.elements:
        u = el.matrix(k)
        acc += u @ (o.conj() if el.antiunitary else o) @ u.conj().T
    return acc / spec.order


def _as_matrices(gens: GeneratorSet | Sequence[np.ndarray]) -> np.ndarray:
    if isinstance(gens, GeneratorSet):
        return gens.matrices()
    return np.asarray(gens, dtype=complex)


def centralizer_basis(gens: GeneratorSet | Sequence[np.ndarray]) -> list[np.ndarray]:
    """Basis of ``{A : [A, g] = 0 for all g}`` over the Pauli basis."""
    gm = _as_matrices(gens)
    k = gm.shape[1].bit_length() - 1
    if k > 4:
        raise ValueError("support larger than 4 sites")
    _, mats = pauli_basis(k)
    rows = []
    for g in gm:
        comm = mats @ g - g @ mats
        rows.append(comm.reshape(len(mats), -1).T)
    null = _nullspace(np.concatenate(rows, axis=0))
    return [np.tensordot(null[:, j], mats, axes=1) for j in range(null.shape[1])]


def centralizer_labels(gens: GeneratorSet | Sequence[np.ndarray]) -> list[str]:
    """Pauli labels spanning the centralizer, when it is spanned by Pauli strings."""
    gm = _as_matrices(gens)
    k = gm.shape[1].bit_length() - 1
    labels, mats = pauli_basis(k)
    basis = centralizer_basis(gm)
    if not basis:
        return []
    # Pauli coefficients of each basis element, orthonormalized
    coeffs = np.einsum("mij,bij->mb", mats.conj(), np.array(basis)) / mats.shape[1]
    q, _ = np.linalg.qr(coeffs)
    diag = np.einsum("ij,ij->i", q, q.conj()).real
    return [lab for lab, d in zip(labels, diag) if d > 1 - 1e-9]


@dataclass
class LieCoefficients:
    thetas: np.ndarray

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float).reshape(-1)


def uniform_angles(rng: np.random.Generator, size) -> np.ndarray:
    """Angles uniform on ``(-pi, pi]``."""
    return np.pi - 2 * np.pi * rng.random(size)


def lie_unitaries(gens: GeneratorSet, thetas: np.ndarray) -> np.ndarray:
    """``exp(sum_k theta_k P_k)`` for each row of ``thetas`` (batched)."""
    thetas = np.asarray(thetas, dtype=float)
    gm = gens.matrices()
    if thetas.shape[-1] != len(gm):
        raise ValueError(f"expected {len(gm)} coefficients, got {thetas.shape[-1]}")
    return expm(np.tensordot(thetas, gm, axes=([-1], [0])))


def exp_lie(gens: GeneratorSet, coeffs: LieCoefficients | Sequence[float]) -> DenseGate:
    th = coeffs.thetas if isinstance(coeffs, LieCoefficients) else np.asarray(coeffs, dtype=float)
    return DenseGate(lie_unitaries(gens, th), tuple(range(gens.support_size)))


def sample_symmetric_gate(gens: GeneratorSet, rng: np.random.Generator) -> DenseGate:
    if not len(gens):
        raise ValueError("empty generator set")
    return exp_lie(gens, uniform_angles(rng, len(gens)))


def sample_symmetric_unitaries(gens: GeneratorSet, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent symmetric gates as a ``(size, d, d)`` array."""
    return lie_unitaries(gens, uniform_angles(rng, (size, len(gens))))
