"""Operator Bloch sphere: precession vectors, two-mode transforms and pump solutions.

A beamsplitter with constant drive acts on the single-excitation subspace
(|1,0>, |0,1>) as the 2x2 matrix

    S(t) = exp(-i h t) = exp(-i delta t / 2) * R_n(Omega t),
    h = [[delta, (g/2) e^{i varphi}], [(g/2) e^{-i varphi}, 0]],

so column 0 of S is the image of mode a.  With the ancilla in |g> or |f>
the detuning becomes ``delta -/+ chi/2``.  Every N-photon sector follows
from S by linearity; in particular, when S is a multiple ``c`` of the
identity the full two-mode unitary is ``c ** (n_a + n_b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .fock import PumpParams

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class DegenerateAxisError(ValueError):
    pass


class NoSolutionError(ValueError):
    pass


class UnreachableEquatorError(ValueError):
    pass


@dataclass(frozen=True)
class PrecessionVector:
    n: np.ndarray
    omega: float
    theta: float
    varphi: float


@dataclass(frozen=True)
class ModeTransform:
    su2: np.ndarray
    prefactor: complex
    duration: float

    @property
    def matrix(self) -> np.ndarray:
        """Full single-excitation transform, prefactor included."""
        return self.prefactor * self.su2

    def then(self, later: "ModeTransform") -> "ModeTransform":
        """Transform for ``self`` followed by ``later``."""
        return ModeTransform(later.su2 @ self.su2, later.prefactor * self.prefactor,
                             self.duration + later.duration)

    @classmethod
    def identity(cls) -> "ModeTransform":
        return cls(np.eye(2, dtype=complex), 1.0 + 0j, 0.0)


def precession_vector(g: float, varphi: float, delta: float) -> PrecessionVector:
    omega = math.hypot(g, delta)
    if omega == 0.0:
        raise DegenerateAxisError("g and delta are both zero; the precession axis is undefined")
    theta = math.atan2(g, delta)
    n = np.array([math.sin(theta) * math.cos(varphi),
                  -math.sin(theta) * math.sin(varphi),
                  math.cos(theta)])
    return PrecessionVector(n, omega, theta, varphi)


def _rotation(n: np.ndarray, angle: float) -> np.ndarray:
    n_sigma = n[0] * PAULI[0] + n[1] * PAULI[1] + n[2] * PAULI[2]
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * n_sigma


def _transform(g: float, varphi: float, delta: float, t: float) -> ModeTransform:
    if t < 0:
        raise ValueError("duration must be non-negative")
    prefactor = complex(np.exp(-1j * delta * t / 2))
    if g == 0.0 and delta == 0.0:
        return ModeTransform(np.eye(2, dtype=complex), prefactor, t)
    pv = precession_vector(g, varphi, delta)
    return ModeTransform(_rotation(pv.n, pv.omega * t), prefactor, t)


def mode_transform(params: PumpParams, t: float) -> ModeTransform:
    """Two-mode transform of a bare (ancilla-independent) beamsplitter; chi is ignored."""
    return _transform(params.g, params.varphi, params.delta, t)


def conditional_transforms(params: PumpParams, t: float) -> tuple[ModeTransform, ModeTransform]:
    """Transforms with the ancilla held in |g> and in |f>."""
    return (_transform(params.g, params.varphi, params.branch_detuning("g"), t),
            _transform(params.g, params.varphi, params.branch_detuning("f"), t))


def branch_precession(params: PumpParams, branch: str) -> PrecessionVector:
    return precession_vector(params.g, params.varphi, params.branch_detuning(branch))


def orbit_phase(delta_eff: float, omega: float) -> float:
    """Phase multiplying each mode operator after one closed orbit, in [0, 2 pi).

    Follows from exp(-i delta T / 2) * R_n(2 pi) = -exp(-i pi delta / Omega).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    if abs(delta_eff) > omega * (1 + 1e-12):
        raise ValueError("|delta_eff| cannot exceed omega")
    return float(np.mod(math.pi * (1 - delta_eff / omega), 2 * math.pi))


# --- pump conditions -------------------------------------------------------

TARGETS = ("cZZ_n1", "cZZ_n2_fast", "cZZ_n2_slow", "cSWAP", "cSWAP_alt", "BS5050", "uSWAP")


def solve_pump(target: str, chi: float, *, n: int | None = None, g: float | None = None,
               chi_e: float = 0.0) -> tuple[PumpParams, float]:
    """Closed-form beamsplitter settings and duration for a primitive.

    Detunings are chosen for the actual sign of ``chi``: the cSWAP drive
    cancels the |f> branch detuning (``delta = -chi/2``) and the 50:50 drive
    cancels the |g> branch detuning (``delta = +chi/2``).  ``uSWAP`` returns
    the duration of one half, i.e. the time to reach the equator.
    """
    if chi == 0:
        raise ValueError("chi must be non-zero")
    c = abs(chi)
    mk = lambda g_, d_: PumpParams(g=g_, varphi=0.0, delta=d_, chi_f=chi, chi_e=chi_e)

    if target == "cZZ_n1":
        return mk(math.sqrt(3) / 2 * c, 0.0), 2 * math.pi / c
    if target == "cZZ_n2_fast":
        return mk(math.sqrt(15) / 2 * c, 0.0), math.pi / c
    if target == "cZZ_n2_slow":
        return mk(math.sqrt(7) / 6 * c, 0.0), 3 * math.pi / c
    if target == "cSWAP":
        g_ = c / math.sqrt(3)
        return mk(g_, -chi / 2), math.pi / g_
    if target == "cSWAP_alt":
        orbits = 1 if n is None else n
        if orbits < 1 or int(orbits) != orbits:
            raise NoSolutionError(f"alternate cSWAP needs a positive integer orbit count, got {n}")
        # pi/g = 2 pi n / sqrt(g^2 + chi^2)  =>  g^2 (4 n^2 - 1) = chi^2
        g_ = c / math.sqrt(4 * orbits ** 2 - 1)
        return mk(g_, -chi / 2), math.pi / g_
    if target == "BS5050":
        g_ = c if g is None else g
        if g_ <= 0:
            raise NoSolutionError("50:50 beamsplitter needs g > 0")
        return mk(g_, chi / 2), math.pi / (2 * g_)
    if target == "uSWAP":
        if g is None:
            raise ValueError("uSWAP needs an explicit beamsplitter rate g")
        params = mk(g, 0.0)
        return params, equator_time(params)
    raise ValueError(f"unknown target {target!r}; expected one of {TARGETS}")


def equator_time(params: PumpParams) -> float:
    """First time the image of a reaches the equator, same for both branches when delta = 0.

    z(t) = cos^2(theta) + sin^2(theta) cos(Omega t) vanishes at
    arccos(-cot^2 theta) / Omega, reachable only for g > |delta_eff|.
    """
    d_eff = params.branch_detuning("g")
    if params.g <= abs(d_eff):
        raise UnreachableEquatorError(
            f"g={params.g:.6g} must exceed |delta_eff|={abs(d_eff):.6g} to reach the equator")
    pv = precession_vector(params.g, params.varphi, d_eff)
    cot2 = (d_eff / params.g) ** 2
    return math.acos(-cot2) / pv.omega


def equator_time_bisect(params: PumpParams, rtol: float = 1e-12) -> float:
    """Root of z(t) located by bracketing, used to cross-check :func:`equator_time`."""
    pv = precession_vector(params.g, params.varphi, params.branch_detuning("g"))
    z = lambda t: math.cos(pv.theta) ** 2 + math.sin(pv.theta) ** 2 * math.cos(pv.omega * t)
    return brentq(z, 0.0, math.pi / pv.omega, rtol=rtol, xtol=1e-300)


# --- trajectories ------------------------------------------------------------

def bloch_point(su2: np.ndarray) -> np.ndarray:
    """Bloch vector of the image of mode a (column 0 of the transform)."""
    u0, u1 = su2[0, 0], su2[1, 0]
    c = np.conj(u0) * u1
    return np.array([2 * c.real, 2 * c.imag, abs(u0) ** 2 - abs(u1) ** 2])


def sample_trajectory(params: PumpParams, ancilla_branch: str, nsteps: int,
                      duration: float | None = None,
                      start: np.ndarray | None = None, t0: float = 0.0):
    """(t, point) samples of the image of a at ``nsteps`` uniform times.

    ``duration`` defaults to one precession period.  ``start`` is an initial
    2x2 transform, letting piecewise trajectories continue from a prior piece.
    """
    if nsteps < 2:
        raise ValueError("nsteps must be at least 2")
    delta = params.branch_detuning(ancilla_branch)
    if duration is None:
        duration = 2 * math.pi / precession_vector(params.g, params.varphi, delta).omega
    start = np.eye(2, dtype=complex) if start is None else start
    out = []
    for t in np.linspace(0.0, duration, nsteps):
        m = _transform(params.g, params.varphi, delta, float(t)).su2 @ start
        out.append((t0 + float(t), bloch_point(m)))
    return out


def uswap_trajectory(params: PumpParams, ancilla_branch: str, nsteps: int):
    """Two-piece uSWAP trajectory; the ancilla pi pulse swaps the branch halfway."""
    t_eq = equator_time(params)
    first = sample_trajectory(params, ancilla_branch, nsteps, t_eq)
    other = "f" if ancilla_branch == "g" else "g"
    mid = _transform(params.g, params.varphi, params.branch_detuning(ancilla_branch), t_eq).su2
    second = sample_trajectory(params, other, nsteps, t_eq, start=mid, t0=t_eq)
    return first + second[1:]


def trajectory_csv_rows(samples, branch: str):
    for t, p in samples:
        yield (f"{t:.12e}", f"{p[0]:.12e}", f"{p[1]:.12e}", f"{p[2]:.12e}", branch)


def with_chi(params: PumpParams, chi: float) -> PumpParams:
    return replace(params, chi_f=chi)
