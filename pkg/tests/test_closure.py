import numpy as np
import pytest
import scipy.sparse as sp

from edbosonic import closure
from edbosonic.fock import HilbertLayout


def ops_and_block(d=8, n_protect=2):
    lay = HilbertLayout((d, d))
    return closure.sparse_ops(lay), closure.protected_indices(lay, n_protect)


def test_sparse_commutator_matches_dense():
    ops, _ = ops_and_block(4)
    a, b = ops["a"], ops["b"]
    c = closure.commutator(a, a.conj().T @ b)
    dense = a.toarray() @ (a.conj().T @ b).toarray() - (a.conj().T @ b).toarray() @ a.toarray()
    assert np.allclose(c.toarray(), dense)


def test_protected_block_is_low_photon_g_f():
    lay = HilbertLayout((5, 5))
    idx = closure.protected_indices(lay, 2)
    n = lay.photon_numbers()[idx]
    assert n.max() == 2
    assert set(lay.ancilla_levels()[idx]) == {0, 2}
    assert idx.size == 2 * 9


def test_sigma_z_squares_to_one_on_block():
    ops, idx = ops_and_block(5)
    sz2 = (ops["sz"] @ ops["sz"]).toarray()[np.ix_(idx, idx)]
    assert np.allclose(sz2, np.eye(idx.size))


def test_product_set_counts_subsets():
    ops, _ = ops_and_block(4)
    assert len(closure.product_set([ops["a"], ops["b"], ops["sz"]])) == 8
    assert len(closure.product_set([ops["a"], ops["b"]], include_identity=False)) == 3


def test_error_set_membership():
    ops, idx = ops_and_block(6)
    es = closure.ErrorSet([ops["a"], ops["b"]], "ab", idx)
    assert es.rank == 2
    assert es.contains(2 * ops["a"] - 1j * ops["b"])
    assert not es.contains(ops["a"] @ ops["b"])
    assert es.residual(sp.csr_matrix(ops["a"].shape, dtype=complex)) == 0.0


def test_orthonormal_basis_drops_dependent_vectors():
    v = [np.array([1.0, 0, 0]), np.array([2.0, 0, 0]), np.array([1.0, 1.0, 0])]
    b = closure.orthonormal_basis(v)
    assert b.shape == (2, 3)
    assert np.allclose(b @ b.conj().T, np.eye(2))


def test_guard_layout_size():
    lay = closure.guard_layout(4, 2, 2)
    assert lay.mode_dims == (2 + 2 + 5 * 2,) * 2


def test_generate_extended_set_validation():
    ops, idx = ops_and_block(4)
    with pytest.raises(closure.ClosureError):
        closure.generate_extended_set(ops["a"], closure.ErrorSet([ops["a"]], "x", idx), max_depth=0)
    with pytest.raises(closure.ClosureError):
        closure.generate_extended_set(ops["a"], closure.ErrorSet([ops["a"]], "x"), max_depth=2)


def test_number_hamiltonian_is_closed_for_loss():
    ops, idx = ops_and_block(8)
    hw = closure.ErrorSet([ops["a"], ops["b"]], "hw", idx)
    corr = closure.ErrorSet(closure.product_set([ops["a"], ops["b"]]), "corr", idx)
    v = closure.check_closure(ops["a"].conj().T @ ops["a"], hw, corr, 4)
    assert v.closed and v.converged and v.extended_rank == 2


def test_squeezing_is_not_closed():
    ops, idx = ops_and_block(14)
    a = ops["a"]
    H = a.conj().T @ a.conj().T + a @ a
    hw = closure.ErrorSet([ops["a"], ops["b"]], "hw", idx)
    corr = closure.ErrorSet(closure.product_set([ops["a"], ops["b"]]), "corr", idx)
    v = closure.check_closure(H, hw, corr, 4)
    assert not v.closed
    assert v.witness_residual > 0.5


def test_bch_residual_open_row_is_large():
    worst = closure.bch_check("a^dag^2 + a^2", times=(1.0,))
    assert worst[1.0] > 1e-3


def test_report_formats():
    rows = closure.candidate_report(max_depth=3, include_sigma_z=False)
    md = closure.report_markdown(rows)
    assert md.startswith("| H0 |") and md.count("\n") == 2 + len(rows)
    csv_text = closure.report_csv(rows)
    assert csv_text.splitlines()[0].startswith("hamiltonian")
