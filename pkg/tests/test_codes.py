import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edbosonic import codes
from edbosonic.codes import (BosonicCode, MissingParameterError, binomial, cardinal_coefficients,
                             cardinal_states, codewords, default_layout, dual_rail, fock01, four_cat,
                             joint_basis, joint_parity, lift, logical_gate, logical_mode_basis, logical_x,
                             logical_z, syndrome_mask)
from edbosonic.fock import G, F, HilbertLayout, LayoutError

ALL = [fock01(), dual_rail(), binomial(), four_cat()]


@pytest.mark.parametrize("code", ALL, ids=lambda c: c.name)
def test_logical_basis_orthonormal(code):
    lay = default_layout(code)
    b = logical_mode_basis(code, lay)
    assert np.allclose(b.conj() @ b.T, np.eye(4), atol=1e-12)


def test_binomial_codewords():
    z, o = codewords(binomial(), 6)
    assert np.allclose(z, np.array([1, 0, 0, 0, 1, 0]) / math.sqrt(2))
    assert np.allclose(o, np.eye(6)[2])


def test_dual_rail_codewords_one_photon_per_rail():
    z, o = codewords(dual_rail(), 3)
    assert z[0 * 3 + 1] == 1 and o[1 * 3 + 0] == 1


def test_four_cat_requires_alpha():
    with pytest.raises(MissingParameterError):
        codewords(BosonicCode("FourCat"), 10)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 2.0))
def test_four_cat_support_mod_four(alpha):
    z, o = codewords(four_cat(alpha), 24)
    n = np.arange(24)
    assert np.allclose(z[n % 4 != 0], 0) and np.allclose(o[n % 4 != 2], 0)
    assert np.linalg.norm(z) == pytest.approx(1) and np.linalg.norm(o) == pytest.approx(1)


@pytest.mark.parametrize("code", ALL, ids=lambda c: c.name)
def test_logical_z_eigenstructure(code):
    lay = default_layout(code)
    b = joint_basis(code, lay)
    signs = {0: [1, 1, -1, -1], 1: [1, -1, 1, -1]}
    for q in (0, 1):
        z = logical_z(code, lay, q).matrix
        for k in range(4):
            assert np.allclose(z @ b[k], signs[q][k] * b[k], atol=1e-10)


@pytest.mark.parametrize("code", ALL, ids=lambda c: c.name)
def test_joint_parity_is_zz(code):
    lay = default_layout(code)
    b = joint_basis(code, lay)
    p = joint_parity(lay, code.gate_modes, code.rotation_order).matrix
    for k, s in enumerate([1, -1, -1, 1]):
        assert np.allclose(p @ b[k], s * b[k], atol=1e-10)


def test_logical_x_flips_qubit():
    code = binomial()
    lay = default_layout(code, 6)
    b = joint_basis(code, lay)
    x0 = logical_x(code, lay, 0).matrix
    assert np.allclose(x0 @ b[0], b[2])
    assert np.allclose(x0 @ b[1], b[3])


def test_cardinal_states():
    labels, coeffs = cardinal_coefficients()
    assert len(labels) == 36 and len(set(labels)) == 36
    assert np.allclose(np.linalg.norm(coeffs, axis=1), 1)
    states = cardinal_states(fock01(), default_layout(fock01(), 3))
    assert all(abs(np.trace(s.density_matrix()) - 1) < 1e-12 for s in states)
    # 36 cardinal states form a 2-design on each qubit: average of |c><c| is I/4
    avg = np.mean([np.outer(c, c.conj()) for c in coeffs], axis=0)
    assert np.allclose(avg, np.eye(4) / 4)


def test_syndrome_masks_accept_codespace():
    for code in ALL:
        lay = default_layout(code)
        m = syndrome_mask(code, lay)
        for v in joint_basis(code, lay):
            assert np.allclose(m * v, v)


def test_binomial_syndrome_flags_single_loss():
    code = binomial()
    lay = default_layout(code, 6)
    m = syndrome_mask(code, lay)
    assert m[lay.index(G, 1, 2)] == 0 and m[lay.index(G, 3, 0)] == 0 and m[lay.index(F, 4, 2)] == 1


def test_dual_rail_syndrome_flags_loss():
    code = dual_rail()
    lay = default_layout(code)
    m = syndrome_mask(code, lay)
    # modes (a1, a2, b1, b2); qubit 0 on (a1, b1), qubit 1 on (a2, b2)
    assert m[lay.index(G, 0, 0, 0, 1)] == 0
    assert m[lay.index(G, 1, 0, 0, 1)] == 1
    assert m[lay.index(G, 1, 0, 1, 0)] == 0


def test_logical_gates_unitary_and_values():
    for g in ("ZZ", "eSWAP", "CPHASE", "iSWAP", "fSim", "I"):
        u = logical_gate(g, 0.7, 0.3)
        assert np.allclose(u.conj().T @ u, np.eye(4))
    zz = logical_gate("ZZ", math.pi)
    assert np.allclose(zz, -1j * np.diag([1, -1, -1, 1]))
    # CPHASE(pi/2) is diagonal with entangling phase pi, i.e. CZ up to local Z rotations
    cz = np.diag(logical_gate("CPHASE", math.pi / 2))
    assert np.allclose(np.abs(cz), 1)
    assert np.exp(1j * np.angle(cz[0] * cz[3] / (cz[1] * cz[2]))) == pytest.approx(-1)
    # fSim(theta, phi) puts phase -phi on |11> relative to |00>
    f = logical_gate("fSim", 0.0, 0.6)
    assert np.angle(f[3, 3] / f[0, 0]) == pytest.approx(-0.6)
    # iSWAP(pi/2) swaps |01> and |10> with a -i
    isw = logical_gate("iSWAP", math.pi / 2)
    assert abs(isw[1, 2] / isw[0, 0]) == pytest.approx(1) and abs(isw[1, 1]) < 1e-12
    with pytest.raises(ValueError):
        logical_gate("CNOT")


def test_lift_places_gate_on_ancilla_block():
    code = fock01()
    lay = default_layout(code, 3)
    u = lift(logical_gate("ZZ", 0.4), code, lay, ancilla=np.diag([0, 0, 1.0])).matrix
    b = joint_basis(code, lay, F)
    assert np.allclose(b.conj() @ u @ b.T, logical_gate("ZZ", 0.4))
    assert np.allclose(joint_basis(code, lay, G).conj() @ u @ joint_basis(code, lay, G).T, 0)


def test_code_validation():
    with pytest.raises(ValueError):
        BosonicCode("GKP")
    with pytest.raises(LayoutError):
        logical_mode_basis(dual_rail(), HilbertLayout((3, 3)))
    with pytest.raises(LayoutError):
        logical_mode_basis(binomial(), HilbertLayout((4, 4)))


def test_reduced_purity():
    assert codes.reduced_purity(np.array([1, 0, 0, 0])) == pytest.approx(1)
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert codes.reduced_purity(bell) == pytest.approx(0.5)
