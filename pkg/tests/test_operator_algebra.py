import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dysonmaps.errors import ConfigError, DomainError
from dysonmaps.operator_algebra import (GENERATORS, RELATIONS, KVector, MatrixRep, build_fock_rep_1mode,
                                        build_fock_rep_2mode, commutator_k, kvector_from_matrix,
                                        ladder_ops, verify_algebra)

K = {g: KVector.basis(g) for g in GENERATORS}

# written out independently of STRUCTURE
TABLE = {
    ("K1", "K2"): KVector.zero(),
    ("K1", "K3"): 1j * K["K4"],
    ("K1", "K4"): -1j * K["K3"],
    ("K2", "K3"): -1j * K["K4"],
    ("K2", "K4"): 1j * K["K3"],
    ("K3", "K4"): 0.5j * (K["K1"] - K["K2"]),
}

finite = st.floats(-3, 3, allow_nan=False)
kvecs = st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                 min_size=4, max_size=4).map(KVector)


def test_six_relations_cover_all_pairs():
    assert set(RELATIONS) == set(TABLE)


@pytest.mark.parametrize("pair", sorted(TABLE))
def test_structure_constants(pair):
    assert commutator_k(K[pair[0]], K[pair[1]]).allclose(TABLE[pair], atol=1e-14)


@pytest.mark.parametrize("pair", sorted(TABLE))
def test_table_matches_explicit_matrices(pair):
    # independent check with matrices built here from ladder operators
    n = 10
    x, p = ladder_ops(n + 2)
    e = np.eye(n + 2)
    mats = {"K1": 0.5 * np.kron(p @ p + x @ x, e), "K2": 0.5 * np.kron(e, p @ p + x @ x),
            "K3": 0.5 * (np.kron(x, x) + np.kron(p, p)), "K4": 0.5 * (np.kron(x, p) - np.kron(p, x))}
    a, b = (mats[k] for k in pair)
    exp = sum(c * mats[g] for c, g in zip(TABLE[pair].coeffs, GENERATORS))
    nx, ny = np.divmod(np.arange((n + 2) ** 2), n + 2)
    idx = np.flatnonzero((nx < n - 3) & (ny < n - 3))
    d = (a @ b - b @ a - exp)[np.ix_(idx, idx)]
    assert np.abs(d).max() < 1e-12


def test_k1_plus_k2_central():
    c = K["K1"] + K["K2"]
    for g in GENERATORS:
        assert commutator_k(c, K[g]).allclose(KVector.zero())


@settings(max_examples=60, deadline=None)
@given(kvecs, kvecs)
def test_antisymmetry(a, b):
    assert commutator_k(a, b).allclose(-commutator_k(b, a), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(kvecs, kvecs, kvecs)
def test_jacobi(a, b, c):
    j = (commutator_k(a, commutator_k(b, c)) + commutator_k(b, commutator_k(c, a))
         + commutator_k(c, commutator_k(a, b)))
    assert j.norm() < 1e-10


@settings(max_examples=30, deadline=None)
@given(kvecs, kvecs, finite)
def test_bilinearity(a, b, s):
    assert commutator_k(a * s, b).allclose(commutator_k(a, b) * s, atol=1e-11)


def test_matrix_relations(rep2):
    report = verify_algebra(rep2, tol=1e-10)
    assert report.passed, report.residuals
    assert len(report.residuals) == 6
    assert max(report.residuals.values()) < 1e-12


def test_boundary_breaks_relations():
    rep = build_fock_rep_2mode(8, 0)
    report = verify_algebra(rep, tol=1e-10)
    assert not report.passed
    assert report.failed_relation is not None
    with pytest.raises(DomainError):
        report.raise_for_failure()


def test_injected_defect_names_relation(rep2):
    mats = dict(rep2.matrices)
    mats["K4"] = np.zeros_like(mats["K4"])
    bad = MatrixRep(rep2.dim_per_mode, 2, mats, rep2.interior_margin)
    assert verify_algebra(bad).failed_relation == "[K1,K3]"


def test_k1_diagonal_exact(rep2):
    d = np.real(np.diag(rep2["K1"]))
    nx, _ = rep2.quanta()
    assert np.allclose(d, nx + 0.5, rtol=0, atol=1e-13)


def test_hermitian_generators(rep2):
    for g in GENERATORS:
        m = rep2[g]
        assert np.allclose(m, m.conj().T, atol=1e-14)


def test_matrices_read_only(rep2):
    with pytest.raises(ValueError):
        rep2["K1"][0, 0] = 1.0


def test_blocks_conserve_total_quanta(rep2):
    nx, ny = rep2.quanta()
    N = nx + ny
    for g in GENERATORS:
        m = rep2[g]
        i, j = np.nonzero(np.abs(m) > 1e-14)
        assert np.all(N[i] == N[j])


def test_kvector_roundtrip(rep2, rng):
    v = KVector(rng.normal(size=4) + 1j * rng.normal(size=4))
    w, resid = kvector_from_matrix(v.to_matrix(rep2), rep2)
    assert w.allclose(v, atol=1e-12)
    assert resid < 1e-12


def test_kvector_from_matrix_flags_outside_span(rep2):
    _, resid = kvector_from_matrix(rep2["x"], rep2)
    assert resid > 0.5


def test_ladder_ops_canonical():
    x, p = ladder_ops(12)
    c = (x @ p - p @ x)[:10, :10]
    assert np.allclose(c, 1j * np.eye(10), atol=1e-13)


@pytest.mark.parametrize("n,margin", [(3, 1), (10, 10), (10, -1)])
def test_bad_two_mode_config(n, margin):
    with pytest.raises(ConfigError):
        build_fock_rep_2mode(n, margin)


def test_one_mode_rep_rejected_by_algebra_check():
    with pytest.raises(ConfigError):
        verify_algebra(build_fock_rep_1mode(16, 4))


def test_one_mode_powers_commute():
    rep = build_fock_rep_1mode(20, 5)
    p, p2, p3 = rep["p"], rep["p2"], rep["p3"]
    assert np.allclose(p @ p2, p3) and np.allclose(p2 @ p, p3)
