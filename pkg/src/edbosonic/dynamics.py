"""Noiseless and open-system propagation of schedules, readout and syndrome post-selection.

Every Hamiltonian here conserves the total photon number and every collapse
operator lowers it, so the block ``N_total <= N_max`` of the Fock space is
invariant.  Open-system runs restrict to that block, which is exact for any
truncation and shrinks the binomial problem from 300 to 135 levels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .circuits import AncillaRotation, Beamsplitter, Delay, Schedule
from .codes import BosonicCode, syndrome_mask
from .fock import (G, HilbertLayout, LayoutError, Operator, ancilla_op,
                   build_hamiltonian, build_nonlinear_terms, destroy, sigma_gf, transmon_lowering)

METHODS = ("dop853", "expm", "rk4")


class IntegrationError(RuntimeError):
    pass


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    gamma1_T: float = 0.0
    gammaphi_T: float = 0.0
    gamma1_cav: tuple[float, ...] | float = 0.0

    def __post_init__(self):
        rates = [self.gamma1_T, self.gammaphi_T, *np.atleast_1d(self.gamma1_cav)]
        if any(r < 0 for r in rates):
            raise ValueError("decoherence rates must be non-negative")

    def cavity_rates(self, n_modes: int) -> np.ndarray:
        r = np.atleast_1d(np.asarray(self.gamma1_cav, dtype=float))
        if r.size == 1:
            return np.full(n_modes, r[0])
        if r.size != n_modes:
            raise LayoutError(f"{r.size} cavity rates given for {n_modes} modes")
        return r

    @property
    def is_noiseless(self) -> bool:
        return self.gamma1_T == 0 and self.gammaphi_T == 0 and not np.any(np.atleast_1d(self.gamma1_cav))

    @classmethod
    def single_channel(cls, channel: str, t_coh: float) -> "NoiseModel":
        rate = 1.0 / t_coh
        if channel == "ancilla_decay":
            return cls(gamma1_T=rate)
        if channel == "ancilla_dephasing":
            return cls(gammaphi_T=rate)
        if channel == "photon_loss":
            return cls(gamma1_cav=rate)
        raise ValueError(f"unknown channel {channel!r}")


CHANNELS = ("ancilla_decay", "ancilla_dephasing", "photon_loss")


@dataclass(frozen=True)
class NonlinearParams:
    """Kerr, cross-Kerr and chi' coefficients in rad/s."""

    K_a: float = 0.0
    K_b: float = 0.0
    chi_e_prime: float = 0.0
    chi_f_prime: float = 0.0
    chi_ab: float = 0.0

    def scaled(self, factor: float, chi_ab_fixed: bool = True) -> "NonlinearParams":
        return NonlinearParams(self.K_a * factor, self.K_b * factor, self.chi_e_prime * factor,
                               self.chi_f_prime * factor, self.chi_ab if chi_ab_fixed else self.chi_ab * factor)


@dataclass(frozen=True)
class ReadoutModel:
    """eta[observed, actual]; each column (fixed actual level) sums to one."""

    eta: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float)
        if eta.shape != (3, 3) or np.any(eta < 0):
            raise ValueError("eta must be a non-negative 3x3 matrix")
        if np.max(np.abs(eta.sum(axis=0) - 1)) > 1e-12:
            raise ValueError("assignment probabilities for each actual level must sum to 1")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)

    @classmethod
    def perfect(cls) -> "ReadoutModel":
        return cls(np.eye(3))

    @classmethod
    def from_errors(cls, eta_ge: float = 0.01, eta_gf: float | None = None,
                    eta_gg: float = 1 - 1e-4) -> "ReadoutModel":
        """Only the |g>-outcome row matters for post-selection; the rest is filled consistently."""
        eta_gf = eta_ge ** 2 if eta_gf is None else eta_gf
        eta = np.array([
            [eta_gg, eta_ge, eta_gf],
            [1 - eta_gg, 1 - eta_ge, 0.0],
            [0.0, 0.0, 1 - eta_gf],
        ])
        return cls(eta)

    @property
    def g_row(self) -> np.ndarray:
        return self.eta[G]


@dataclass(frozen=True)
class SimOutcome:
    rho_postselected: np.ndarray
    failure_prob: float
    syndrome_pass_prob: float


# --- Hamiltonians -------------------------------------------------------------

def segment_hamiltonian(seg, layout: HilbertLayout, mode_pair: tuple[int, int],
                        nonlinear: NonlinearParams | Operator | None = None) -> Operator:
    """H/hbar for one segment.

    While the ancilla is driven, the dispersive coupling and every
    ancilla-induced correction (self-Kerr, chi') are dropped; only the bare
    cross-Kerr remains.  A full ``Operator`` is added to every segment as is.
    """
    if isinstance(seg, (Beamsplitter, Delay)):
        h = build_hamiltonian(seg.params, layout, mode_pair)
        rotation = False
    elif isinstance(seg, AncillaRotation):
        h = ancilla_op(layout, seg.drive_strength * sigma_gf(seg.axis))
        rotation = True
    else:
        raise TypeError(f"unknown segment {seg!r}")
    if isinstance(nonlinear, Operator):
        h = h + nonlinear
    elif nonlinear is not None:
        nl = NonlinearParams(chi_ab=nonlinear.chi_ab) if rotation else nonlinear
        h = h + build_nonlinear_terms(nl.K_a, nl.K_b, nl.chi_e_prime, nl.chi_f_prime, nl.chi_ab,
                                      layout, mode_pair, include_dispersive=not rotation)
    return h


def _check_layout(schedule: Schedule, layout: HilbertLayout) -> None:
    for m in schedule.mode_pair:
        layout.slot(m)


def _hermitian_propagator(h: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _split_at(schedule: Schedule, insertions) -> tuple[list, dict]:
    """Split segments so every insertion time falls on a piece boundary.

    ``insertions`` maps a position to an operator.  A position is an integer
    segment index (insert after that segment, ``-1`` = before everything) or
    a pair ``(index, t)`` meaning time ``t`` into that segment.  Returns the
    pieces and a map from piece index to the operators applied after it.
    """
    ins = {}
    for key, op in (insertions or {}).items():
        idx, t = (key, None) if isinstance(key, (int, np.integer)) else key
        ins.setdefault(int(idx), []).append((t, op))
    pieces, after = [], {}
    for op_t, op in ins.get(-1, []):
        after.setdefault(-1, []).append(op)
    for i, seg in enumerate(schedule.segments):
        here = sorted(ins.get(i, []), key=lambda p: seg.duration if p[0] is None else p[0])
        start = 0.0
        for t, op in here:
            t = seg.duration if t is None else min(max(t, 0.0), seg.duration)
            if t > start:
                pieces.append(_with_duration(seg, t - start))
                start = t
            after.setdefault(len(pieces) - 1, []).append(op)
        if seg.duration > start:
            pieces.append(_with_duration(seg, seg.duration - start))
    return pieces, after


def _with_duration(seg, t: float):
    if isinstance(seg, AncillaRotation):
        return AncillaRotation(seg.axis, seg.drive_strength * 2 * t, t)
    return type(seg)(seg.params, t)


def propagate_unitary(schedule: Schedule, layout: HilbertLayout,
                      nonlinear: NonlinearParams | Operator | None = None,
                      insertions: dict | None = None) -> Operator:
    """Ordered product of exp(-i H t) over the segments (frame not removed).

    ``insertions`` places extra operators inside the sequence; see
    :func:`_split_at` for the key format.  Key ``-1`` inserts before
    the first segment.
    """
    _check_layout(schedule, layout)
    pieces, after = _split_at(schedule, insertions)
    u = np.eye(layout.dim, dtype=complex)
    for op in after.get(-1, []):
        u = _as_matrix(op) @ u
    for k, seg in enumerate(pieces):
        h = segment_hamiltonian(seg, layout, schedule.mode_pair, nonlinear).matrix
        u = _hermitian_propagator(h, seg.duration) @ u
        for op in after.get(k, []):
            u = _as_matrix(op) @ u
    return Operator(layout, u)


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, Operator) else np.asarray(op, dtype=complex)


def frame_operator(schedule: Schedule, layout: HilbertLayout, inverse: bool = True) -> Operator:
    """exp(-/+ i phi N) on the beamsplitter pair; ``inverse`` removes the tracked frame."""
    n = layout.photon_numbers()[:, list(schedule.mode_pair)].sum(axis=1)
    sign = -1 if inverse else 1
    return Operator(layout, np.diag(np.exp(sign * 1j * schedule.frame_phase * n)))


def remove_frame(schedule: Schedule, layout: HilbertLayout, u: Operator) -> Operator:
    return frame_operator(schedule, layout) @ u


# --- open-system propagation --------------------------------------------------

def active_indices(layout: HilbertLayout, inputs: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Basis indices with total photon number <= the largest one present in ``inputs``."""
    total = layout.photon_numbers().sum(axis=1)
    support = np.any(np.abs(inputs) > tol, axis=tuple(range(inputs.ndim - 2)) + (inputs.ndim - 1,)) \
        | np.any(np.abs(inputs) > tol, axis=tuple(range(inputs.ndim - 1)))
    if not support.any():
        return np.arange(layout.dim)
    n_max = total[support].max()
    return np.flatnonzero(total <= n_max)


def collapse_operators(noise: NoiseModel, layout: HilbertLayout) -> list[np.ndarray]:
    ops = []
    if noise.gamma1_T > 0:
        ops.append(math.sqrt(noise.gamma1_T) * ancilla_op(layout, transmon_lowering()).matrix)
    if noise.gammaphi_T > 0:
        t = transmon_lowering()
        ops.append(math.sqrt(noise.gammaphi_T) * ancilla_op(layout, t.conj().T @ t).matrix)
    for m, r in enumerate(noise.cavity_rates(layout.n_modes)):
        if r > 0:
            ops.append(math.sqrt(r) * destroy(layout, m).matrix)
    return ops


def liouvillian(h: np.ndarray, collapses: list[np.ndarray]) -> sp.csr_matrix:
    """Superoperator acting on row-major vec(rho): vec(A rho B) = (A kron B^T) vec(rho)."""
    n = h.shape[0]
    eye = sp.identity(n, dtype=complex, format="csr")
    hs = sp.csr_matrix(h)
    L = -1j * (sp.kron(hs, eye) - sp.kron(eye, hs.T))
    for c in collapses:
        cs = sp.csr_matrix(c)
        cdc = (cs.conj().T @ cs)
        L = L + sp.kron(cs, cs.conj()) - 0.5 * sp.kron(cdc, eye) - 0.5 * sp.kron(eye, cdc.T)
    L = sp.csr_matrix(L)
    L.eliminate_zeros()
    return L


def _rk4(L, y, t, max_step):
    steps = max(1, int(math.ceil(t / max_step)))
    dt = t / steps
    for _ in range(steps):
        k1 = L @ y
        k2 = L @ (y + 0.5 * dt * k1)
        k3 = L @ (y + 0.5 * dt * k2)
        k4 = L @ (y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def _evolve(L, y, t, method, rtol, atol, rk4_steps_per_unit):
    if method == "expm":
        return expm_multiply(L * t, y)
    if method == "rk4":
        scale = float(abs(L).sum(axis=0).max())
        return _rk4(L, y, t, 1.0 / (rk4_steps_per_unit * max(scale, 1e-300)))
    if method == "dop853":
        shape = y.shape
        sol = solve_ivp(lambda _, v: (L @ v.reshape(shape)).reshape(-1), (0.0, t), y.reshape(-1),
                        method="DOP853", rtol=rtol, atol=atol, t_eval=[t])
        if not sol.success:
            raise IntegrationError(sol.message)
        return sol.y[:, -1].reshape(shape)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def propagate_channel(schedule: Schedule, noise: NoiseModel, layout: HilbertLayout,
                      inputs: np.ndarray, nonlinear: NonlinearParams | Operator | None = None,
                      method: str = "expm", rtol: float = 1e-9, atol: float = 1e-12,
                      rk4_steps_per_unit: float = 2.0, restrict: bool = True,
                      insertions: dict | None = None) -> np.ndarray:
    """Apply the schedule's channel to a stack of (not necessarily Hermitian) matrices.

    ``inputs`` has shape (k, d, d) or (d, d).  Linearity lets callers push
    matrix units through and combine afterwards.
    """
    _check_layout(schedule, layout)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    x = np.asarray(inputs, dtype=complex)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1:] != (layout.dim, layout.dim):
        raise LayoutError(f"input matrices must be {layout.dim}x{layout.dim}")
    idx = active_indices(layout, x) if restrict else np.arange(layout.dim)
    sub = np.ix_(idx, idx)
    n = idx.size
    k = x.shape[0]
    # columns of y are vec(rho_j), row-major
    y = np.stack([xi[sub].reshape(-1) for xi in x], axis=1)
    full_c = collapse_operators(noise, layout)
    cs = [c[sub] for c in full_c]
    pieces, after = _split_at(schedule, insertions)
    for op in after.get(-1, []):
        y = _apply_op(y, _as_matrix(op)[sub], n)
    for j, seg in enumerate(pieces):
        h = segment_hamiltonian(seg, layout, schedule.mode_pair, nonlinear).matrix[sub]
        if not cs and method != "rk4":
            u = _hermitian_propagator(h, seg.duration)
            y = _apply_op(y, u, n)
        else:
            L = liouvillian(h, cs)
            y = _evolve(L, y, seg.duration, method, rtol, atol, rk4_steps_per_unit)
        for op in after.get(j, []):
            y = _apply_op(y, _as_matrix(op)[sub], n)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite values during propagation")
    out = np.zeros((k, layout.dim, layout.dim), dtype=complex)
    for j in range(k):
        out[j][sub] = y[:, j].reshape(n, n)
    return out[0] if single else out


def _apply_op(y: np.ndarray, u: np.ndarray, n: int) -> np.ndarray:
    """rho -> U rho U^dag for every column of y."""
    k = y.shape[1]
    r = y.T.reshape(k, n, n)
    r = u @ r @ u.conj().T
    return r.reshape(k, n * n).T


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidStateError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.norm(rho - rho.conj().T) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise InvalidStateError("density matrix is not positive semidefinite")


def propagate_lindblad(schedule: Schedule, noise: NoiseModel, layout: HilbertLayout,
                       rho0: np.ndarray, nonlinear: NonlinearParams | Operator | None = None,
                       **kwargs) -> np.ndarray:
    """Final density matrix after the schedule's sequence of Lindblad channels."""
    rho0 = np.asarray(rho0, dtype=complex)
    validate_density_matrix(rho0)
    return propagate_channel(schedule, noise, layout, rho0, nonlinear, **kwargs)


# --- readout and syndromes ----------------------------------------------------

def ancilla_levels_mask(layout: HilbertLayout) -> np.ndarray:
    return layout.ancilla_levels()


def apply_readout(rho: np.ndarray, readout: ReadoutModel, layout: HilbertLayout) -> tuple[np.ndarray, float]:
    """(sum_psi eta_{g psi} P_psi rho P_psi, 1 - Tr[P_g rho])."""
    lev = layout.ancilla_levels()
    same = lev[:, None] == lev[None, :]
    weight = readout.g_row[lev][:, None]
    rho_g = np.where(same, rho * weight, 0.0)
    failure = 1.0 - float(np.real(np.diag(rho)[lev == G].sum()))
    return rho_g, failure


def apply_syndrome(rho: np.ndarray, code: BosonicCode, layout: HilbertLayout) -> tuple[np.ndarray, float]:
    m = syndrome_mask(code, layout)
    out = rho * np.outer(m, m)
    tr_in = float(np.real(np.trace(rho)))
    pass_prob = float(np.real(np.trace(out))) / tr_in if tr_in > 0 else 0.0
    return out, pass_prob


def partial_trace_ancilla(rho: np.ndarray, layout: HilbertLayout) -> np.ndarray:
    d = layout.mode_space_dim
    r = rho.reshape(3, d, 3, d)
    return np.einsum("iaib->ab", r)


def simulate(schedule: Schedule, code: BosonicCode, noise: NoiseModel, readout: ReadoutModel,
             layout: HilbertLayout, rho0: np.ndarray, **kwargs) -> SimOutcome:
    rho = propagate_lindblad(schedule, noise, layout, rho0, **kwargs)
    rho_g, failure = apply_readout(rho, readout, layout)
    rho_ps, pass_prob = apply_syndrome(rho_g, code, layout)
    return SimOutcome(rho_ps, failure, pass_prob)
