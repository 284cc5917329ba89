import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from edbosonic import bloch
from edbosonic.fock import G, F, HilbertLayout, PumpParams, build_hamiltonian

CHI = -2 * math.pi * 1e6


def full_space_single_excitation(params, t, level):
    """2x2 block of exp(-iHt) on |1,0>,|0,1> with the ancilla in ``level``."""
    lay = HilbertLayout((2, 2))
    u = expm(-1j * build_hamiltonian(params, lay).matrix * t)
    idx = [lay.index(level, 1, 0), lay.index(level, 0, 1)]
    return u[np.ix_(idx, idx)]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-math.pi, math.pi), st.floats(-2.0, 2.0),
       st.floats(-2.0, 2.0), st.floats(0.0, 5.0))
def test_transform_matches_full_space_propagation(g, phi, delta, chi, t):
    p = PumpParams(g, phi, delta, chi)
    tg, tf = bloch.conditional_transforms(p, t)
    assert np.allclose(tg.matrix, full_space_single_excitation(p, t, G), atol=1e-10)
    assert np.allclose(tf.matrix, full_space_single_excitation(p, t, F), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(-math.pi, math.pi), st.floats(-2.0, 2.0))
def test_precession_vector_is_unit_and_rate_correct(g, phi, delta):
    if g == 0 and delta == 0:
        with pytest.raises(bloch.DegenerateAxisError):
            bloch.precession_vector(g, phi, delta)
        return
    pv = bloch.precession_vector(g, phi, delta)
    assert np.linalg.norm(pv.n) == pytest.approx(1.0)
    assert pv.omega == pytest.approx(math.hypot(g, delta))
    assert math.cos(pv.theta) == pytest.approx(delta / pv.omega, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_transforms_compose(g, delta, t1, t2):
    a = bloch._transform(g, 0.2, delta, t1)
    b = bloch._transform(g, 0.2, delta, t2)
    both = bloch._transform(g, 0.2, delta, t1 + t2)
    assert np.allclose(a.then(b).matrix, both.matrix, atol=1e-10)
    assert a.then(b).duration == pytest.approx(t1 + t2)


def test_pump_table_values():
    c = abs(CHI)
    p, t = bloch.solve_pump("cZZ_n1", CHI)
    assert (p.g, t) == pytest.approx((math.sqrt(3) / 2 * c, 2 * math.pi / c))
    p, t = bloch.solve_pump("cZZ_n2_fast", CHI)
    assert (p.g, t) == pytest.approx((math.sqrt(15) / 2 * c, math.pi / c))
    p, t = bloch.solve_pump("cZZ_n2_slow", CHI)
    assert (p.g, t) == pytest.approx((math.sqrt(7) / 6 * c, 3 * math.pi / c))
    p, t = bloch.solve_pump("cSWAP", CHI)
    assert (p.g, t) == pytest.approx((c / math.sqrt(3), math.sqrt(3) * math.pi / c))
    assert p.delta == pytest.approx(c / 2)


@pytest.mark.parametrize("target,n,phase", [
    ("cZZ_n1", None, math.pi),
    ("cZZ_n2_fast", None, math.pi / 2),
    ("cZZ_n2_slow", None, -math.pi / 2),
])
def test_joint_parity_branches_are_scalar(target, n, phase):
    p, t = bloch.solve_pump(target, CHI)
    tg, tf = bloch.conditional_transforms(p, t)
    assert abs(tg.matrix[0, 1]) < 1e-12 and abs(tf.matrix[0, 1]) < 1e-12
    rel = tf.matrix[0, 0] / tg.matrix[0, 0]
    assert abs(np.exp(1j * phase) - rel) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_cswap_alt_idles_g_and_swaps_f(n):
    p, t = bloch.solve_pump("cSWAP_alt", CHI, n=n)
    tg, tf = bloch.conditional_transforms(p, t)
    assert abs(tf.matrix[0, 0]) < 1e-12 and abs(abs(tf.matrix[1, 0]) - 1) < 1e-12
    assert abs(tg.matrix[0, 1]) < 1e-12


def test_cswap_alt_rejects_bad_orbit():
    with pytest.raises(bloch.NoSolutionError):
        bloch.solve_pump("cSWAP_alt", CHI, n=0)


def test_bs5050_on_g_branch():
    p, t = bloch.solve_pump("BS5050", CHI)
    tg, _ = bloch.conditional_transforms(p, t)
    assert np.allclose(np.abs(tg.matrix), np.full((2, 2), 1 / math.sqrt(2)))


@pytest.mark.parametrize("g_over_chi", [0.51, 0.8, 2.0])
def test_equator_time_closed_form_vs_bisection(g_over_chi):
    p, t_eq = bloch.solve_pump("uSWAP", CHI, g=g_over_chi * abs(CHI))
    assert t_eq == pytest.approx(bloch.equator_time_bisect(p), rel=1e-10)
    tg, tf = bloch.conditional_transforms(p, t_eq)
    assert bloch.bloch_point(tg.su2)[2] == pytest.approx(0, abs=1e-10)
    assert bloch.bloch_point(tf.su2)[2] == pytest.approx(0, abs=1e-10)


def test_equator_unreachable():
    # g must beat the branch detuning |chi|/2
    with pytest.raises(bloch.UnreachableEquatorError):
        bloch.solve_pump("uSWAP", CHI, g=0.3 * abs(CHI))


def test_uswap_trajectory_ends_at_south_pole():
    p, _ = bloch.solve_pump("uSWAP", CHI, g=0.8 * abs(CHI))
    samples = bloch.uswap_trajectory(p, "g", 21)
    assert samples[0][1][2] == pytest.approx(1.0)
    assert samples[-1][1][2] == pytest.approx(-1.0, abs=1e-10)
    assert all(np.linalg.norm(x) == pytest.approx(1.0) for _, x in samples)
    ts = [t for t, _ in samples]
    assert ts == sorted(ts)


def test_orbit_phase_range():
    assert bloch.orbit_phase(0.0, 1.0) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        bloch.orbit_phase(2.0, 1.0)


def test_unknown_target():
    with pytest.raises(ValueError):
        bloch.solve_pump("CNOT", CHI)
    with pytest.raises(ValueError):
        bloch.solve_pump("cZZ_n1", 0.0)
