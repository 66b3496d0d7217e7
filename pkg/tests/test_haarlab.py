import json

import numpy as np
import pytest

from qpl.fixedpoints import build_fixed_point
from qpl.haarlab import (
    ConvergenceCurve,
    batch_means,
    lemma_centralizer_report,
    lemma_report_json,
    product_twirl_expectation,
    random_words,
    twirl_average,
    twirl_convergence,
    twirl_deviation,
)
from qpl.qalg import PAULI_MATS, StateVector, apply_matrix_inplace
from qpl.symgates import builtin_generators, sample_symmetric_gate, symmetry_residual

P = builtin_generators("TimeReversal_T", 2)
Z = PAULI_MATS["Z"]


def traceless(rng, d=4):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return m - np.trace(m) / d * np.eye(d)


def test_random_words_symmetric_and_unitary(rng):
    us = random_words(P, rng, 50)
    assert us.shape == (50, 4, 4)
    assert np.abs(us @ us.conj().transpose(0, 2, 1) - np.eye(4)).max() <= 1e-12
    assert max(symmetry_residual(u, "TimeReversal_T") for u in us) <= 1e-10
    with pytest.raises(ValueError):
        random_words(P, rng, 5, word_length=0)


def test_identity_twirl_exact():
    avg = twirl_average(np.eye(4), P, K=100)
    np.testing.assert_allclose(avg, np.eye(4), atol=1e-13)


def test_twirl_input_checks():
    with pytest.raises(ValueError):
        twirl_average(np.eye(2), P, K=100)
    with pytest.raises(ValueError):
        twirl_average(np.eye(4), P, K=99)


def test_twirl_deterministic(rng):
    m = traceless(rng)
    np.testing.assert_array_equal(twirl_average(m, P, 200, seed=4), twirl_average(m, P, 200, seed=4))
    # chunking only regroups the sum
    np.testing.assert_allclose(twirl_average(m, P, 200, seed=4), twirl_average(m, P, 200, seed=4, chunk=64),
                               atol=1e-14)


def test_twirl_collapses_to_trace(rng):
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    dev = twirl_deviation(m, twirl_average(m, P, 3000, seed=1))
    assert dev < 0.2
    # unaveraged deviation is order one
    assert twirl_deviation(m, m) > 1


def test_twirl_deviation_oracle():
    m = np.diag([1.0, 2.0, 3.0, 6.0]).astype(complex)
    assert twirl_deviation(m, 3 * np.eye(4)) == 0
    assert twirl_deviation(m, m) == pytest.approx(np.sqrt(4 + 1 + 0 + 9))


def test_convergence_decreases(rng):
    curve = twirl_convergence(traceless(rng), P, Ks=(100, 400, 1600), reps=5, seed=2)
    inversions = sum(b > a for a, b in zip(curve.deviations, curve.deviations[1:]))
    assert inversions <= 1
    assert -0.8 < curve.slope < -0.2
    assert curve.to_csv().startswith("K,frobenius_deviation\n100,")


def test_curve_csv():
    c = ConvergenceCurve([100, 1000], [0.5, 0.125], -0.6)
    assert c.to_csv() == "K,frobenius_deviation\n100,0.5\n1000,0.125\n"


def test_batch_means():
    est = batch_means(np.arange(100.0))
    assert est.mean == 49.5 and est.K == 100
    means = np.arange(10) * 10 + 4.5
    assert est.stderr == pytest.approx(means.std(ddof=1) / np.sqrt(10))


def test_product_twirl_identity_exact(rng):
    est = product_twirl_expectation(build_fixed_point("SB_cat", 4), np.eye(16), P, K=100, seed=0)
    assert est.mean == pytest.approx(1.0, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)


def test_product_twirl_single_block_zz():
    zz = np.kron(Z, Z)
    est = product_twirl_expectation(build_fixed_point("SB_cat", 4), zz, P, K=2000, seed=1, targets=(0, 1))
    assert abs(est.mean) <= 3 * est.stderr + 0.02


def test_product_twirl_left_invariance():
    zz = np.kron(Z, Z)
    st = build_fixed_point("SB_cat", 4)
    base = product_twirl_expectation(st, zz, P, K=2000, seed=2, targets=(0, 1))
    moved = st.amps.copy().reshape(-1, 1)
    apply_matrix_inplace(moved, sample_symmetric_gate(P, np.random.default_rng(7)).matrix, (0, 1))
    other = product_twirl_expectation(StateVector(moved.reshape(-1)), zz, P, K=2000, seed=3, targets=(0, 1))
    assert abs(base.mean - other.mean) <= 3 * np.hypot(base.stderr, other.stderr) + 0.02


def test_product_twirl_checks():
    st = build_fixed_point("SB_cat", 5)
    with pytest.raises(ValueError):
        product_twirl_expectation(st, np.eye(32), P, K=100)
    with pytest.raises(ValueError):
        product_twirl_expectation(build_fixed_point("SB_cat", 4), np.eye(4), P, K=100)


def test_lemma_report():
    rep = lemma_centralizer_report()
    assert [(c.lemma, c.computed_dim) for c in rep] == [("S1", 1), ("S2", 2), ("S3", 4)]
    assert all(c.passed for c in rep)
    doc = json.loads(lemma_report_json(rep))
    assert doc[1]["basis_labels"] == ["III", "XXX"]
    assert set(doc[0]) == {"lemma", "symmetry", "support_size", "expected_dim", "computed_dim", "basis_labels",
                           "passed"}
