import numpy as np
import pytest

from qpl.datagen import NoiseConfig, apply_ti_noise
from qpl.fixedpoints import (
    LABEL_NAMES,
    FixedPointKind,
    build_fixed_point,
    cluster_boundary_stabilizers,
    time_reversal_overlap,
    verify_stabilizers,
)
from qpl.qalg import PauliString, pauli_expectation, random_state

K = FixedPointKind


def test_labels():
    assert {k: k.label for k in K} == {
        K.SB_cat: 1, K.SB_product0: 1, K.SB_product1: 1, K.Trivial_plus: 0, K.SPT_cluster: 2}
    assert LABEL_NAMES == {0: "Trivial", 1: "SB", 2: "SPT"}


def test_cat_amplitudes():
    a = build_fixed_point("SB_cat", 3).amps
    want = np.zeros(8)
    want[[0, 7]] = 1 / np.sqrt(2)
    np.testing.assert_allclose(a, want, atol=0)


def test_plus_amplitudes():
    np.testing.assert_allclose(build_fixed_point(K.Trivial_plus, 2).amps, [0.5] * 4, atol=0)


def test_cluster_bulk_stabilizers_minus_one():
    s = build_fixed_point(K.SPT_cluster, 8)
    for i in range(1, 7):
        v = pauli_expectation(s, PauliString("ZXZ", (i - 1, i, i + 1)))
        assert v == pytest.approx(-1.0, abs=1e-12)


def test_cluster_boundary_stabilizers():
    # H+CZ on |1..1>: boundary stabilizers carry the same -1 sign
    s = build_fixed_point(K.SPT_cluster, 6)
    for p in cluster_boundary_stabilizers(6):
        assert pauli_expectation(s, p) == pytest.approx(-1.0, abs=1e-12)


def test_cluster_matches_circuit_oracle():
    """Compare with an explicit H + CZ circuit on |1..1> built by dense matrices."""
    n = 5
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    v = np.zeros(1 << n)
    v[-1] = 1
    hn = np.eye(1)
    for _ in range(n):
        hn = np.kron(hn, h)
    v = hn @ v
    idx = np.arange(1 << n)
    for i in range(n - 1):
        bi, bj = (idx >> (n - 1 - i)) & 1, (idx >> (n - 2 - i)) & 1
        v = v * (1 - 2 * (bi & bj))
    np.testing.assert_allclose(build_fixed_point(K.SPT_cluster, n).amps, v, atol=1e-14)


@pytest.mark.parametrize("kind", list(K))
@pytest.mark.parametrize("n", [2, 5, 8])
def test_normalized_and_stabilized(kind, n):
    s = build_fixed_point(kind, n)
    assert s.norm() == pytest.approx(1.0, abs=1e-14)
    rep = verify_stabilizers(s, kind)
    assert rep.passed and rep.max_deviation <= 1e-12


@pytest.mark.parametrize("n", [1, 21])
def test_size_limits(n):
    with pytest.raises(ValueError):
        build_fixed_point(K.SB_cat, n)


def test_random_states_flagged():
    rng = np.random.default_rng(0)
    for kind in (K.SB_cat, K.Trivial_plus, K.SPT_cluster):
        for _ in range(20):
            rep = verify_stabilizers(random_state(6, rng), kind)
            assert not rep.passed
            assert rep.max_deviation > 0.1
            assert rep.failures()


@pytest.mark.parametrize("kind", [K.SB_cat, K.Trivial_plus])
def test_time_reversal_overlap_symmetric(kind):
    assert abs(time_reversal_overlap(build_fixed_point(kind, 8))) == pytest.approx(1.0, abs=1e-10)


def test_time_reversal_overlap_cluster_ring():
    s = build_fixed_point(K.SPT_cluster, 8, periodic=True)
    assert abs(time_reversal_overlap(s)) == pytest.approx(1.0, abs=1e-10)


def test_open_cluster_edge_modes():
    """Open chain: prod X equals Y X..X Y times stabilizers, so the overlap vanishes."""
    s = build_fixed_point(K.SPT_cluster, 8)
    assert abs(time_reversal_overlap(s)) <= 1e-12
    assert pauli_expectation(s, PauliString("Y" + "X" * 6 + "Y", tuple(range(8)))) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", [K.SB_product0, K.SB_product1])
def test_time_reversal_broken_by_products(kind):
    assert abs(time_reversal_overlap(build_fixed_point(kind, 8))) <= 1e-12


@pytest.mark.parametrize("kind", [K.SB_cat, K.Trivial_plus])
def test_noise_preserves_symmetry_overlap(kind):
    cfg = NoiseConfig.for_symmetry("TimeReversal_T", 3)
    rng = np.random.default_rng(9)
    out = apply_ti_noise(build_fixed_point(kind, 10), cfg, rng)
    assert abs(time_reversal_overlap(out)) == pytest.approx(1.0, abs=1e-10)
