import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edbosonic import circuits, metrics
from edbosonic.codes import cardinal_coefficients, fock01, logical_gate
from edbosonic.dynamics import NoiseModel, ReadoutModel
from edbosonic.fock import HilbertLayout

CHI = -2 * math.pi * 1e6
LAY = HilbertLayout((3, 3))


def test_subspace_fidelity_closed_form():
    k = 4
    phases = np.exp(1j * np.array([0.3, -0.1, 0.0, 0.5]))
    u = np.diag(phases)
    f = metrics.subspace_fidelity(u, np.eye(k), np.eye(k))
    assert f == pytest.approx((k + abs(phases.sum()) ** 2) / (k * (k + 1)))
    assert metrics.subspace_fidelity(u, u, np.eye(k)) == pytest.approx(1.0)


def test_subspace_fidelity_penalizes_leakage():
    u = np.eye(3)[:, [2, 1, 0]]  # moves basis state 0 out of the subspace {0, 1}
    f = metrics.subspace_fidelity(u, np.eye(3), np.eye(3)[:2])
    assert f < 1 - 0.2


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.5, 3.0))
def test_fit_power_law_recovers_exact_law(amp, n):
    x = np.array([1e-4, 1e-3, 1e-2, 3e-2])
    fit = metrics.fit_power_law(x, amp * x ** n)
    assert fit.exponent == pytest.approx(n, rel=1e-9)
    assert fit.amplitude == pytest.approx(amp, rel=1e-8)
    assert fit.residual < 1e-9


def test_pinned_order_amplitude():
    x = np.array([1 / 3000, 1 / 1000, 1 / 300, 1 / 100, 1 / 30])
    y = 3 * x + 10 * x ** 2
    fit = metrics.fit_power_law(x, y)
    assert fit.order == 1
    assert fit.order_amplitude == pytest.approx(np.exp(np.mean(np.log(y / x))))


def test_fit_errors():
    with pytest.raises(metrics.FitError):
        metrics.fit_power_law([1, 2, 3], [1, 2, 3])
    with pytest.raises(metrics.FitError):
        metrics.fit_power_law([1, 2, 3, 4], [1, 0, 3, 4])
    with pytest.raises(metrics.FitError):
        metrics.fit_power_law([1, 2, 3, 4], [1, 2, 3, 4])
    with pytest.raises(ValueError):
        metrics.fit_scaling([], "leakage")


def cardinal_oracle(actual, target):
    _, coeffs = cardinal_coefficients()
    return 1 - np.mean([abs((target @ c).conj() @ (actual @ c)) ** 2 for c in coeffs])


@pytest.mark.parametrize("theta,target_theta", [(math.pi / 2, math.pi / 2), (0.6, 0.2), (0.0, math.pi)])
def test_noiseless_infidelity_matches_logical_oracle(theta, target_theta):
    code = fock01()
    s = circuits.zz_gate(code, theta, CHI)
    p = metrics.error_detected_infidelity(s, code, NoiseModel(), ReadoutModel.perfect(), LAY,
                                          logical_gate("ZZ", target_theta))
    ref = cardinal_oracle(logical_gate("ZZ", theta), logical_gate("ZZ", target_theta))
    assert p.ed_infidelity == pytest.approx(ref, abs=1e-10)
    assert p.failure_prob == pytest.approx(0.0, abs=1e-10)
    assert p.tau_gate == pytest.approx(s.duration)


def test_average_over_cardinals_of_zz_pi():
    # ZZ(pi) vs identity: only the 4 Z-eigenstate products keep full fidelity
    assert cardinal_oracle(logical_gate("ZZ", math.pi), np.eye(4)) == pytest.approx(1 - 1 / 9)


def test_coherence_sweep_failure_is_first_order():
    gate = metrics.GateSpec(code=fock01())
    pts = metrics.coherence_sweep(gate, "ancilla_decay", ratios=(100, 300, 1000, 3000), layout=LAY)
    fit = metrics.fit_scaling(pts, "failure")
    assert fit.exponent == pytest.approx(1.0, abs=0.1)
    assert [p.ratio for p in pts] == pytest.approx([1 / 100, 1 / 300, 1 / 1000, 1 / 3000])  # tau / T
    with pytest.raises(ValueError):
        metrics.coherence_sweep(gate, "leakage")


def test_nonlinearity_scaling():
    nl = metrics.nonlinearity_at(2 * metrics.ANCHOR_CHI_F)
    a = metrics.ANCHOR_NONLINEAR
    assert nl.K_a == pytest.approx(4 * a.K_a)
    assert nl.chi_f_prime == pytest.approx(4 * a.chi_f_prime)
    assert nl.chi_ab == pytest.approx(a.chi_ab)


def test_sweep_csv_format():
    p = metrics.SweepPoint(1e-4, 1e-6, 0.01, 1e-5, "photon_loss", CHI)
    text = metrics.sweep_csv([p, p])
    lines = text.splitlines()
    assert lines[0] == ",".join(metrics.SWEEP_FIELDS)
    assert len(lines) == 3 and lines[1] == lines[2]
    assert "1.000000000000e-04" in lines[1]


def test_gate_spec():
    g = metrics.GateSpec(kind="eSWAP", theta=0.4, code=fock01())
    assert g.schedule().label.startswith("exp[cSWAP]")
    assert np.allclose(g.target(), logical_gate("eSWAP", 0.4))
    with pytest.raises(ValueError):
        metrics.GateSpec(kind="CNOT").schedule()


@pytest.mark.parametrize("target", ["cZZ_n1", "cSWAP", "cSWAP_alt", "BS5050", "uSWAP"])
def test_verify_primitive_fast_rows(target):
    assert metrics.verify_primitive(target, CHI) >= 1 - 1e-8


def test_controlled_and_swap_helpers():
    lay = HilbertLayout((2, 2))
    sw = metrics.mode_swap(lay, (0, 1))
    assert np.allclose(sw @ sw, np.eye(lay.dim))
    assert sw[lay.index(0, 0, 1), lay.index(0, 1, 0)] == 1
    c = metrics.controlled(lay, np.eye(lay.dim), sw)
    assert c[lay.index(1, 1, 0), lay.index(1, 1, 0)] == 0  # |e> block is empty
