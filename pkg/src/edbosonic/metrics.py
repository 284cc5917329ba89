"""Error-detected infidelity, failure probability and power-law fits."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bloch, circuits
from .codes import BosonicCode, binomial, fock01, cardinal_coefficients, default_layout, joint_basis, logical_gate, logical_mode_basis
from .dynamics import (CHANNELS, NoiseModel, NonlinearParams, ReadoutModel, apply_readout, apply_syndrome,
                       frame_operator, partial_trace_ancilla, propagate_channel, propagate_unitary, remove_frame)
from .fock import F, G, HilbertLayout

TWO_PI = 2 * math.pi
DEFAULT_RATIOS = (30, 100, 300, 1000, 3000)

# operating point the nonlinearities are quoted at, all in rad/s
ANCHOR_CHI_F = -TWO_PI * 1e6
ANCHOR_NONLINEAR = NonlinearParams(K_a=TWO_PI * 2e3, K_b=TWO_PI * 2e3, chi_e_prime=TWO_PI * 1.125e3,
                                   chi_f_prime=TWO_PI * 2e3, chi_ab=TWO_PI * 100)


class DegeneratePostselectionError(RuntimeError):
    pass


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SweepPoint:
    t_coh: float
    tau_gate: float
    failure_prob: float
    ed_infidelity: float
    channel: str = ""
    chi_f: float = 0.0
    readout_failure: float = 0.0
    syndrome_pass_prob: float = 1.0

    @property
    def ratio(self) -> float:
        """tau_gate / T_coh."""
        return self.tau_gate / self.t_coh if self.t_coh and math.isfinite(self.t_coh) else 0.0


@dataclass(frozen=True)
class ScalingFit:
    """Free log-log fit plus the amplitude obtained with the exponent pinned to an integer order."""

    amplitude: float
    exponent: float
    residual: float
    order: int = 0
    order_amplitude: float = float("nan")


@dataclass(frozen=True)
class GateSpec:
    """Which logical gate to build and how; rates in rad/s, times in seconds."""

    kind: str = "ZZ"
    theta: float = math.pi / 2
    code: BosonicCode = BosonicCode("Binomial")
    chi_f: float = ANCHOR_CHI_F
    chi_e: float | None = None
    rot_duration: float = circuits.DEFAULT_ROT_DURATION
    variant: str = "fast"

    def schedule(self, chi_f: float | None = None) -> circuits.Schedule:
        chi = self.chi_f if chi_f is None else chi_f
        chi_e = None if chi_f is not None else self.chi_e
        if self.kind == "ZZ":
            return circuits.zz_gate(self.code, self.theta, chi, chi_e, self.rot_duration, self.variant)
        if self.kind == "eSWAP":
            return circuits.eswap_gate(self.code, self.theta, chi, chi_e, self.rot_duration)
        raise ValueError(f"unsupported gate kind {self.kind!r}")

    def target(self) -> np.ndarray:
        return logical_gate(self.kind, self.theta)


# --- core metric -------------------------------------------------------------------

@dataclass(frozen=True)
class CardinalResult:
    fidelity: np.ndarray          # per cardinal state, conditioned on acceptance
    accept: np.ndarray            # Tr[M rho_p M]
    readout_failure: np.ndarray   # 1 - Tr[P_g rho]
    syndrome_pass: np.ndarray


def _dyad_outputs(schedule, code, noise, layout, nonlinear, **kw) -> np.ndarray:
    basis = joint_basis(code, layout)
    dyads = np.array([np.outer(basis[i], basis[j].conj()) for i in range(4) for j in range(4)])
    out = propagate_channel(schedule, noise, layout, dyads, nonlinear, **kw)
    f = frame_operator(schedule, layout).matrix
    return np.array([f @ o @ f.conj().T for o in out]).reshape(4, 4, layout.dim, layout.dim)


def evaluate_cardinal_states(schedule, code: BosonicCode, noise: NoiseModel, readout: ReadoutModel,
                             layout: HilbertLayout, target: np.ndarray,
                             nonlinear: NonlinearParams | None = None, **kw) -> CardinalResult:
    """Propagate the 16 logical matrix units once, then assemble all 36 cardinal states."""
    outs = _dyad_outputs(schedule, code, noise, layout, nonlinear, **kw)
    modes = logical_mode_basis(code, layout)
    _, coeffs = cardinal_coefficients()
    fid, acc, rfail, spass = [], [], [], []
    for c in coeffs:
        rho = np.einsum("i,j,ijab->ab", c, c.conj(), outs)
        rho_p, fail = apply_readout(rho, readout, layout)
        rho_pm, pass_prob = apply_syndrome(rho_p, code, layout)
        accept = float(np.real(np.trace(rho_pm)))
        if accept <= 0:
            raise DegeneratePostselectionError("post-selection removed the whole state")
        psi = (target @ c) @ modes
        overlap = float(np.real(psi.conj() @ partial_trace_ancilla(rho_pm, layout) @ psi))
        fid.append(overlap / accept)
        acc.append(accept)
        rfail.append(fail)
        spass.append(pass_prob)
    return CardinalResult(np.array(fid), np.array(acc), np.array(rfail), np.array(spass))


def error_detected_infidelity(gate_schedule, code: BosonicCode, noise: NoiseModel, readout: ReadoutModel,
                              layout: HilbertLayout, target: np.ndarray, t_coh: float = math.inf,
                              channel: str = "", nonlinear: NonlinearParams | None = None,
                              chi_f: float = 0.0, **kw) -> SweepPoint:
    """Average over the 36 cardinal states of 1 - F conditioned on acceptance.

    ``failure_prob`` is the mean rejection probability 1 - Tr[M rho_p M]
    including readout assignment; ``readout_failure`` is 1 - Tr[P_g rho].
    """
    r = evaluate_cardinal_states(gate_schedule, code, noise, readout, layout, target, nonlinear, **kw)
    return SweepPoint(
        t_coh=t_coh, tau_gate=gate_schedule.duration,
        failure_prob=float(np.clip(1 - r.accept.mean(), 0.0, 1.0)),
        ed_infidelity=float(np.clip(1 - r.fidelity.mean(), 0.0, 1.0)),
        channel=channel, chi_f=chi_f,
        readout_failure=float(np.clip(r.readout_failure.mean(), 0.0, 1.0)),
        syndrome_pass_prob=float(r.syndrome_pass.mean()),
    )


# --- sweeps ----------------------------------------------------------------------

def coherence_sweep(gate: GateSpec, channel: str, ratios=DEFAULT_RATIOS,
                    readout: ReadoutModel | None = None, layout: HilbertLayout | None = None,
                    **kw) -> list[SweepPoint]:
    """Single-channel sweep with T_coh = ratio * tau_gate."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    readout = ReadoutModel.perfect() if readout is None else readout
    layout = default_layout(gate.code) if layout is None else layout
    sched = gate.schedule()
    out = []
    for ratio in ratios:
        t_coh = ratio * sched.duration
        noise = NoiseModel.single_channel(channel, t_coh)
        out.append(error_detected_infidelity(sched, gate.code, noise, readout, layout, gate.target(),
                                             t_coh=t_coh, channel=channel, chi_f=gate.chi_f, **kw))
    return out


def nonlinearity_at(chi_f: float, anchor: NonlinearParams = ANCHOR_NONLINEAR,
                    anchor_chi: float = ANCHOR_CHI_F) -> NonlinearParams:
    """Kerr and chi' terms scaled by (chi_f / anchor)^2; cross-Kerr held fixed."""
    return anchor.scaled((chi_f / anchor_chi) ** 2, chi_ab_fixed=True)


def chi_sweep(gate: GateSpec, noise: NoiseModel, chi_values, readout: ReadoutModel | None = None,
              layout: HilbertLayout | None = None, nonlinearity_scaling=nonlinearity_at,
              **kw) -> list[SweepPoint]:
    """ED infidelity versus chi_f with nonlinearities following ``nonlinearity_scaling``."""
    readout = ReadoutModel.perfect() if readout is None else readout
    layout = default_layout(gate.code) if layout is None else layout
    out = []
    for chi in chi_values:
        sched = gate.schedule(chi)
        out.append(error_detected_infidelity(sched, gate.code, noise, readout, layout, gate.target(),
                                             channel="chi", nonlinear=nonlinearity_scaling(chi),
                                             chi_f=chi, **kw))
    return out


def fit_scaling(points, quantity: str = "infidelity") -> ScalingFit:
    """Least squares of log(quantity) against log(tau/T): quantity = A (tau/T)^n."""
    key = {"infidelity": "ed_infidelity", "failure": "failure_prob"}.get(quantity)
    if key is None:
        raise ValueError("quantity must be 'failure' or 'infidelity'")
    x = np.array([p.ratio for p in points])
    y = np.array([getattr(p, key) for p in points])
    return fit_power_law(x, y)


def fit_power_law(x, y) -> ScalingFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise FitError("at least four points are needed")
    if np.any(x <= 0) or np.any(y <= 0):
        raise FitError("power-law fits need strictly positive data")
    if np.log10(x.max() / x.min()) < 1 - 1e-12:
        raise FitError("fit points must span at least one decade")
    lx, ly = np.log(x), np.log(y)
    (n, log_a), res, *_ = np.polyfit(lx, ly, 1, full=True)
    resid = float(np.sqrt(res[0] / x.size)) if res.size else 0.0
    order = max(1, int(round(n)))
    a_order = float(np.exp(np.mean(ly - order * lx)))
    return ScalingFit(float(np.exp(log_a)), float(n), resid, order, a_order)


# --- output ------------------------------------------------------------------------

SWEEP_FIELDS = ("channel", "chi_f", "t_coh", "tau_gate", "failure", "infidelity",
                "readout_failure", "syndrome_pass")


def sweep_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for p in points:
        w.writerow([p.channel, f"{p.chi_f:.12e}", f"{p.t_coh:.12e}", f"{p.tau_gate:.12e}",
                    f"{p.failure_prob:.12e}", f"{p.ed_infidelity:.12e}",
                    f"{p.readout_failure:.12e}", f"{p.syndrome_pass_prob:.12e}"])
    return buf.getvalue()


def fit_report(fits: dict) -> str:
    return json.dumps({k: asdict(v) for k, v in fits.items()}, indent=2, sort_keys=True)


# --- primitive verification ----------------------------------------------------------

def subspace_fidelity(u: np.ndarray, v: np.ndarray, basis: np.ndarray) -> float:
    """Average gate fidelity of ``u`` against ``v`` on the span of ``basis`` rows.

    Uses (|Tr V_k^dag U_k|^2 + Tr U_k^dag U_k) / (k(k+1)), which also
    penalizes leakage out of the subspace.
    """
    b = np.atleast_2d(basis)
    k = b.shape[0]
    uk = b.conj() @ u @ b.T
    vk = b.conj() @ v @ b.T
    return float((abs(np.trace(vk.conj().T @ uk)) ** 2 + np.real(np.trace(uk.conj().T @ uk))) / (k * (k + 1)))


def passive_unitary(layout: HilbertLayout, mode_pair, generator: np.ndarray) -> np.ndarray:
    """exp(-i sum_ij G_ij c_i^dag c_j) for a 2x2 Hermitian G on the pair (dense exponential)."""
    from scipy.linalg import expm
    from .fock import destroy
    ops = [destroy(layout, m).matrix for m in mode_pair]
    h = sum(generator[i, j] * ops[i].conj().T @ ops[j] for i in range(2) for j in range(2))
    return expm(-1j * h)


def mode_swap(layout: HilbertLayout, mode_pair) -> np.ndarray:
    """Permutation exchanging the Fock labels of the two modes (requires equal truncation)."""
    i, j = mode_pair
    if layout.mode_dims[i] != layout.mode_dims[j]:
        raise ValueError("swap needs equal truncations")
    photons = layout.photon_numbers()
    lev = layout.ancilla_levels()
    p = np.zeros((layout.dim, layout.dim))
    for k in range(layout.dim):
        n = photons[k].copy()
        n[i], n[j] = n[j], n[i]
        p[layout.index(lev[k], *n), k] = 1.0
    return p


def controlled(layout: HilbertLayout, on_g: np.ndarray, on_f: np.ndarray) -> np.ndarray:
    """on_g (x) |g><g| + on_f (x) |f><f|, the inputs being full-space mode operators."""
    lev = layout.ancilla_levels()
    pg = np.diag((lev == 0).astype(float))
    pf = np.diag((lev == 2).astype(float))
    return on_g @ pg + on_f @ pf


def verify_primitive(target: str, chi: float, n: int = 2, g: float | None = None,
                     mode_dim: int | None = None) -> float:
    """Full-space check of a primitive against its controlled-unitary definition.

    Returns the average fidelity on the relevant codespace (both ancilla
    branches), or on the N <= d-1 sectors for the balanced beamsplitter.  The
    truncation must hold every total-photon sector the check touches.
    """
    if mode_dim is None:
        mode_dim = 9 if target.startswith("cZZ_n2") else 6
    layout = HilbertLayout((mode_dim, mode_dim))
    pair = (0, 1)
    eye = np.eye(layout.dim)
    if target.startswith("cZZ"):
        order = 1 if target == "cZZ_n1" else 2
        sched = circuits.schedule_czz(order, chi, "slow" if target.endswith("slow") else "fast")
        parity = np.diag(np.exp(1j * math.pi / order * layout.photon_numbers().sum(axis=1)))
        ideal = controlled(layout, eye, parity)
        code = fock01() if order == 1 else binomial()
    elif target in ("cSWAP", "cSWAP_alt"):
        if target == "cSWAP":
            sched = circuits.schedule_cswap(chi)
        else:
            params, t = bloch.solve_pump("cSWAP_alt", chi, n=n)
            sched = circuits.Schedule((circuits.Beamsplitter(params, t),), 0.0, pair, "cSWAP_alt")
            m = circuits.branch_transform(sched.segments, "g").matrix
            sched = circuits.Schedule(sched.segments, float(np.angle(m[0, 0])), pair, "cSWAP_alt")
        ideal = controlled(layout, eye, mode_swap(layout, pair))
        code = fock01()
        if target == "cSWAP_alt":
            # the |f> branch carries its own orbit phase: compare up to it
            mf = circuits.branch_transform(sched.segments, "f").matrix
            ph = mf[1, 0] / abs(mf[1, 0]) / np.exp(1j * sched.frame_phase)
            nph = np.diag(ph ** layout.photon_numbers().sum(axis=1))
            ideal = controlled(layout, eye, nph @ mode_swap(layout, pair))
    elif target == "BS5050":
        sched = circuits.schedule_bs5050(chi, g)
        bs = passive_unitary(layout, pair, np.array([[0, 1], [1, 0]]) * math.pi / 4)
        u = propagate_unitary(sched, layout).matrix
        lev = layout.ancilla_levels()
        total = layout.photon_numbers().sum(axis=1)
        basis = np.eye(layout.dim)[(lev == 0) & (total <= mode_dim - 1)]
        return subspace_fidelity(u, bs, basis)
    elif target == "uSWAP":
        sched = circuits.schedule_uswap(g or abs(chi), chi)
        u = propagate_unitary(sched, layout).matrix
        amp = [abs(u[layout.index(2 - lev, 0, 1), layout.index(lev, 1, 0)]) for lev in (0, 2)]
        return float(min(amp) ** 2)
    else:
        raise ValueError(f"unknown target {target!r}")
    u = remove_frame(sched, layout, propagate_unitary(sched, layout)).matrix
    basis = np.vstack([joint_basis(code, layout, G), joint_basis(code, layout, F)])
    return subspace_fidelity(u, ideal, basis)
