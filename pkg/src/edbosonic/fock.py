"""Truncated Fock-space operators for a three-level ancilla coupled to bosonic modes.

Slot order is fixed: the ancilla occupies slot 0, bosonic modes follow in
declaration order.  Mode indices used throughout the package (``mode=0`` is
the first bosonic mode) never include the ancilla slot.

Ancilla basis: index 0 = |g>, 1 = |e>, 2 = |f>.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

ANCILLA_DIM = 3
G, E, F = 0, 1, 2

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10


class LayoutError(ValueError):
    """Raised when an operator or state does not fit the requested layout."""


class InvalidDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class HilbertLayout:
    mode_dims: tuple[int, ...]
    ancilla_dim: int = ANCILLA_DIM

    def __post_init__(self):
        object.__setattr__(self, "mode_dims", tuple(int(d) for d in self.mode_dims))
        if self.ancilla_dim != ANCILLA_DIM:
            raise LayoutError(f"ancilla_dim must be {ANCILLA_DIM}, got {self.ancilla_dim}")
        if not 1 <= len(self.mode_dims) <= 4:
            raise LayoutError("between 1 and 4 bosonic modes are supported")
        if any(d < 2 for d in self.mode_dims):
            raise LayoutError(f"every mode dimension must be >= 2, got {self.mode_dims}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.ancilla_dim, *self.mode_dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def mode_space_dim(self) -> int:
        return int(np.prod(self.mode_dims))

    def slot(self, mode: int) -> int:
        """Tensor slot of bosonic mode ``mode``."""
        if not 0 <= mode < self.n_modes:
            raise LayoutError(f"mode index {mode} out of range for {self.n_modes} modes")
        return mode + 1

    def index(self, ancilla: int, *photons: int) -> int:
        """Flat basis index of |ancilla, n_0, n_1, ...>."""
        if len(photons) != self.n_modes:
            raise LayoutError("one photon number per mode is required")
        return int(np.ravel_multi_index((ancilla, *photons), self.dims))

    def basis_state(self, ancilla: int, *photons: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(ancilla, *photons)] = 1.0
        return psi

    def photon_numbers(self) -> np.ndarray:
        """Array of shape (dim, n_modes) with the photon count of every basis state."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1).T
        return grids[:, 1:]

    def ancilla_levels(self) -> np.ndarray:
        return np.indices(self.dims).reshape(len(self.dims), -1)[0]


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on the full space of ``layout``.

    Immutable by convention: arithmetic returns new operators and the stored
    matrix is flagged read-only.
    """

    layout: HilbertLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.layout.dim, self.layout.dim):
            raise LayoutError(f"matrix shape {m.shape} does not match layout dim {self.layout.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "Operator") -> None:
        if not isinstance(other, Operator):
            raise TypeError(f"expected Operator, got {type(other).__name__}")
        if other.layout != self.layout:
            raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")

    def __add__(self, other):
        self._check(other)
        return Operator(self.layout, self.matrix + other.matrix)

    def __sub__(self, other):
        self._check(other)
        return Operator(self.layout, self.matrix - other.matrix)

    def __neg__(self):
        return Operator(self.layout, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products")
        return Operator(self.layout, self.matrix * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.layout, self.matrix / scalar)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.layout, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(self.norm(), 1.0)
        return np.linalg.norm(self.matrix - self.matrix.conj().T) <= tol * scale

    def is_unitary(self, tol: float = UNITARY_TOL) -> bool:
        eye = np.eye(self.layout.dim)
        return np.linalg.norm(self.matrix.conj().T @ self.matrix - eye) <= tol * np.sqrt(self.layout.dim)

    @classmethod
    def identity(cls, layout: HilbertLayout) -> "Operator":
        return cls(layout, np.eye(layout.dim))

    @classmethod
    def zero(cls, layout: HilbertLayout) -> "Operator":
        return cls(layout, np.zeros((layout.dim, layout.dim)))


def ladder(dim: int) -> np.ndarray:
    """Single-mode annihilation operator truncated to ``dim`` Fock levels."""
    if dim < 2:
        raise InvalidDimensionError(f"ladder operator needs dim >= 2, got {dim}")
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)


def embed(op: np.ndarray, slot: int, layout: HilbertLayout) -> Operator:
    """Tensor ``op`` into ``slot`` (0 = ancilla, 1.. = modes) with identities elsewhere."""
    dims = layout.dims
    if not 0 <= slot < len(dims):
        raise LayoutError(f"slot {slot} out of range")
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[slot], dims[slot]):
        raise LayoutError(f"operator of shape {op.shape} does not fit slot {slot} of dim {dims[slot]}")
    factors = [op if k == slot else np.eye(d) for k, d in enumerate(dims)]
    return Operator(layout, reduce(np.kron, factors))


# --- elementary operators -------------------------------------------------

def destroy(layout: HilbertLayout, mode: int) -> Operator:
    return embed(ladder(layout.mode_dims[mode]), layout.slot(mode), layout)


def number(layout: HilbertLayout, mode: int) -> Operator:
    d = layout.mode_dims[mode]
    return embed(np.diag(np.arange(d)), layout.slot(mode), layout)


def ancilla_projector(layout: HilbertLayout, level: int) -> Operator:
    p = np.zeros((ANCILLA_DIM, ANCILLA_DIM))
    p[level, level] = 1.0
    return embed(p, 0, layout)


def ancilla_op(layout: HilbertLayout, matrix: np.ndarray) -> Operator:
    return embed(matrix, 0, layout)


def sigma_gf(axis: str) -> np.ndarray:
    """Pauli matrix of the g-f manifold on the three-level ancilla."""
    s = np.zeros((3, 3), dtype=complex)
    if axis == "x":
        s[G, F] = s[F, G] = 1.0
    elif axis == "y":
        s[F, G] = 1j
        s[G, F] = -1j
    elif axis == "z":
        s[G, G] = 1.0
        s[F, F] = -1.0
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return s


def transmon_lowering() -> np.ndarray:
    """t = |g><e| + sqrt(2)|e><f|."""
    t = np.zeros((3, 3), dtype=complex)
    t[G, E] = 1.0
    t[E, F] = np.sqrt(2.0)
    return t


def total_photons(layout: HilbertLayout, modes: Sequence[int] | None = None) -> Operator:
    modes = range(layout.n_modes) if modes is None else modes
    total = Operator.zero(layout)
    for m in modes:
        total = total + number(layout, m)
    return total


def _check_pair(layout: HilbertLayout, mode_pair: tuple[int, int]) -> tuple[int, int]:
    a, b = mode_pair
    if a == b:
        raise LayoutError(f"mode pair must name two distinct modes, got {mode_pair}")
    layout.slot(a)
    layout.slot(b)
    return a, b


def angular_momentum(layout: HilbertLayout, mode_pair: tuple[int, int] = (0, 1)):
    """Schwinger operators (L_I, L_X, L_Y, L_Z) for the two modes of ``mode_pair``."""
    ia, ib = _check_pair(layout, mode_pair)
    a = destroy(layout, ia)
    b = destroy(layout, ib)
    ad, bd = a.dag(), b.dag()
    L_I = (ad @ a + bd @ b) * 0.5
    L_X = (ad @ b + a @ bd) * 0.5
    L_Y = (ad @ b - a @ bd) * (1 / 2j)
    L_Z = (ad @ a - bd @ b) * 0.5
    return L_I, L_X, L_Y, L_Z


@dataclass(frozen=True)
class PumpParams:
    """Drive and coupling knobs, all angular frequencies in rad/s.

    ``delta`` is the beamsplitter detuning applied to ``a^dag a``; the
    ancilla-dependent part of the detuning enters through ``chi_f``.
    """

    g: float = 0.0
    varphi: float = 0.0
    delta: float = 0.0
    chi_f: float = 0.0
    chi_e: float = 0.0

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("g must be non-negative; put the sign into varphi")

    def branch_detuning(self, branch: str) -> float:
        """Effective a^dag a detuning seen with the ancilla in |g> or |f>."""
        if branch == "g":
            return self.delta - self.chi_f / 2
        if branch == "f":
            return self.delta + self.chi_f / 2
        raise ValueError(f"branch must be 'g' or 'f', got {branch!r}")


def dispersive_term(layout: HilbertLayout, chi_f: float, chi_e: float, mode: int = 0) -> Operator:
    """-n_a [ (chi_f/2)|g><g| + (chi_f/2 - chi_e)|e><e| - (chi_f/2)|f><f| ]."""
    shifts = np.diag([chi_f / 2, chi_f / 2 - chi_e, -chi_f / 2]).astype(complex)
    return -(embed(shifts, 0, layout) @ number(layout, mode))


def beamsplitter_term(layout: HilbertLayout, g: float, varphi: float, delta: float,
                      mode_pair: tuple[int, int] = (0, 1)) -> Operator:
    ia, ib = _check_pair(layout, mode_pair)
    a = destroy(layout, ia)
    b = destroy(layout, ib)
    coupling = a.dag() @ b * np.exp(1j * varphi)
    return (coupling + coupling.dag()) * (g / 2) + number(layout, ia) * delta


def build_hamiltonian(params: PumpParams, layout: HilbertLayout,
                      mode_pair: tuple[int, int] = (0, 1)) -> Operator:
    """Dispersive beamsplitter Hamiltonian (H / hbar, rad/s).

    The ancilla couples dispersively to the first mode of ``mode_pair``, which
    is also the mode carrying the detuning.
    """
    ia, _ = _check_pair(layout, mode_pair)
    h = beamsplitter_term(layout, params.g, params.varphi, params.delta, mode_pair)
    h = h + dispersive_term(layout, params.chi_f, params.chi_e, ia)
    return h


def build_nonlinear_terms(K_a: float, K_b: float, chi_e_prime: float, chi_f_prime: float,
                          chi_ab: float, layout: HilbertLayout,
                          mode_pair: tuple[int, int] = (0, 1),
                          include_dispersive: bool = True) -> Operator:
    """Self-Kerr, cross-Kerr and chi' corrections (H_NL / hbar).

    ``include_dispersive=False`` drops the ancilla-dependent chi' terms, as
    used during ancilla rotations.
    """
    if layout.n_modes < 2:
        raise LayoutError("nonlinear terms need at least two modes")
    ia, ib = _check_pair(layout, mode_pair)
    a, b = destroy(layout, ia), destroy(layout, ib)
    aa = a.dag() @ a.dag() @ a @ a
    bb = b.dag() @ b.dag() @ b @ b
    h = aa * (-K_a / 2) + bb * (-K_b / 2) + (a.dag() @ a @ b.dag() @ b) * chi_ab
    if include_dispersive:
        shifts = np.diag([0.0, chi_e_prime, chi_f_prime]).astype(complex)
        h = h + aa @ embed(shifts, 0, layout)
    return h


def commutator(A: Operator, B: Operator) -> Operator:
    A._check(B)
    return Operator(A.layout, A.matrix @ B.matrix - B.matrix @ A.matrix)
