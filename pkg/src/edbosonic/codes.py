"""Bosonic qubit encodings, cardinal states, syndrome projectors and logical targets.

Two logical qubits share one layout.  Single-mode codes put qubit 0 on mode
0 and qubit 1 on mode 1.  Dual-rail uses modes ordered (a1, a2, b1, b2):
qubit 0 lives on (a1, b1) = modes (0, 2), qubit 1 on (a2, b2) = modes
(1, 3), and the beamsplitter pair is (a1, a2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import G, HilbertLayout, LayoutError, Operator, embed

CODE_NAMES = ("Fock01", "DualRail", "Binomial", "FourCat")


class MissingParameterError(ValueError):
    pass


@dataclass(frozen=True)
class BosonicCode:
    name: str
    alpha: float | None = None

    def __post_init__(self):
        if self.name not in CODE_NAMES:
            raise ValueError(f"unknown code {self.name!r}; expected one of {CODE_NAMES}")

    @property
    def modes_per_qubit(self) -> int:
        return 2 if self.name == "DualRail" else 1

    @property
    def rotation_order(self) -> int:
        return 2 if self.name in ("Binomial", "FourCat") else 1

    def qubit_modes(self, qubit: int) -> tuple[int, ...]:
        if qubit not in (0, 1):
            raise LayoutError("qubit index must be 0 or 1")
        return (qubit, qubit + 2) if self.name == "DualRail" else (qubit,)

    @property
    def gate_pair(self) -> tuple[int, int]:
        """(dispersive mode, partner) for the two-qubit beamsplitter.

        Dual-rail couples the ancilla to a2 and drives a1 <-> a2.
        """
        return (1, 0) if self.name == "DualRail" else (0, 1)

    @property
    def gate_modes(self) -> tuple[int, int]:
        """Modes whose photon number enters the joint parity ZZ_L."""
        return (0, 1)


def fock01() -> BosonicCode:
    return BosonicCode("Fock01")


def dual_rail() -> BosonicCode:
    return BosonicCode("DualRail")


def binomial() -> BosonicCode:
    return BosonicCode("Binomial")


def four_cat(alpha: float = math.sqrt(2.0)) -> BosonicCode:
    return BosonicCode("FourCat", alpha)


def default_layout(code: BosonicCode, mode_dim: int | None = None) -> HilbertLayout:
    if code.name == "DualRail":
        return HilbertLayout((mode_dim or 3,) * 4)
    default = {"Fock01": 6, "Binomial": 10, "FourCat": 16}[code.name]
    return HilbertLayout((mode_dim or default,) * 2)


def _fock(n: int, dim: int) -> np.ndarray:
    if n >= dim:
        raise LayoutError(f"Fock state |{n}> does not fit a mode of dimension {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def codewords(code: BosonicCode, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """(|0_L>, |1_L>) over the code's own modes; dual-rail vectors live on dim**2."""
    if code.name == "Fock01":
        return _fock(0, dim), _fock(1, dim)
    if code.name == "DualRail":
        return np.kron(_fock(0, dim), _fock(1, dim)), np.kron(_fock(1, dim), _fock(0, dim))
    if code.name == "Binomial":
        return (_fock(0, dim) + _fock(4, dim)) / math.sqrt(2), _fock(2, dim)
    if code.alpha is None:
        raise MissingParameterError("FourCat codewords need an amplitude alpha")
    n = np.arange(dim)
    log_amp = n * math.log(abs(code.alpha)) - 0.5 * np.array([math.lgamma(k + 1) for k in n]) \
        if code.alpha != 0 else None
    if log_amp is None:
        raise MissingParameterError("FourCat amplitude must be non-zero")
    amp = np.exp(log_amp)
    zero = np.where(n % 4 == 0, amp, 0.0).astype(complex)
    one = np.where(n % 4 == 2, amp, 0.0).astype(complex)
    return zero / np.linalg.norm(zero), one / np.linalg.norm(one)


def _qubit_dim(code: BosonicCode, layout: HilbertLayout) -> int:
    needed = 4 if code.name == "DualRail" else 2
    if layout.n_modes < needed:
        raise LayoutError(f"{code.name} needs {needed} modes, layout has {layout.n_modes}")
    dims = {layout.mode_dims[m] for q in (0, 1) for m in code.qubit_modes(q)}
    if len(dims) != 1:
        raise LayoutError("the modes of a code must share one truncation")
    return dims.pop()


def _place(code: BosonicCode, layout: HilbertLayout, q0: np.ndarray, q1: np.ndarray) -> np.ndarray:
    """Mode-space tensor with qubit states q0, q1 and vacuum on unused modes."""
    d = _qubit_dim(code, layout)
    nm = layout.n_modes
    t0 = q0.reshape((d,) * code.modes_per_qubit)
    t1 = q1.reshape((d,) * code.modes_per_qubit)
    joint = np.multiply.outer(t0, t1)  # axes: modes of q0, then modes of q1
    order = list(code.qubit_modes(0)) + list(code.qubit_modes(1))
    used = len(order)
    for m in range(nm):
        if m not in order:
            joint = np.multiply.outer(joint, _fock(0, layout.mode_dims[m]))
            order.append(m)
    joint = np.transpose(joint, np.argsort(order))
    return joint.reshape(-1) if used else joint


def logical_mode_basis(code: BosonicCode, layout: HilbertLayout) -> np.ndarray:
    """Mode-space vectors of |00>, |01>, |10>, |11> (qubit 0 first), shape (4, mode_dim)."""
    d = _qubit_dim(code, layout)
    w = codewords(code, d)
    return np.array([_place(code, layout, w[i], w[j]) for i in (0, 1) for j in (0, 1)])


def with_ancilla(mode_vectors: np.ndarray, layout: HilbertLayout, level: int = G) -> np.ndarray:
    anc = np.zeros(3, dtype=complex)
    anc[level] = 1.0
    mode_vectors = np.atleast_2d(mode_vectors)
    out = np.array([np.kron(anc, v) for v in mode_vectors])
    return out


def joint_basis(code: BosonicCode, layout: HilbertLayout, level: int = G) -> np.ndarray:
    """Full-space logical basis states with the ancilla in ``level``, shape (4, dim)."""
    return with_ancilla(logical_mode_basis(code, layout), layout, level)


def logical_z(code: BosonicCode, layout: HilbertLayout, qubit_slot: int) -> Operator:
    """exp(i pi/n a^dag a) on the designated mode of ``qubit_slot``."""
    mode = code.qubit_modes(qubit_slot)[0]
    d = layout.mode_dims[mode]
    phase = np.exp(1j * math.pi / code.rotation_order * np.arange(d))
    return embed(np.diag(phase), layout.slot(mode), layout)


def logical_x(code: BosonicCode, layout: HilbertLayout, qubit_slot: int) -> Operator:
    """|0_L><1_L| + |1_L><0_L| on one qubit; identity on the ancilla, other qubit projected on its codespace."""
    x = np.array([[0, 1], [1, 0]])
    eye = np.eye(2)
    u = np.kron(x, eye) if qubit_slot == 0 else np.kron(eye, x)
    return lift(u, code, layout, ancilla=np.eye(3))


# --- cardinal states -------------------------------------------------------

CARDINAL_LABELS = ("0", "1", "+", "-", "+i", "-i")
_S = 1 / math.sqrt(2)
CARDINAL_COEFFS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "+i": np.array([_S, 1j * _S], dtype=complex),
    "-i": np.array([_S, -1j * _S], dtype=complex),
}


@dataclass(frozen=True)
class LogicalTwoQubitState:
    label: str
    coefficients: np.ndarray  # length 4 in the |00>,|01>,|10>,|11> basis
    vector: np.ndarray        # full-space state, ancilla in |g>
    code: BosonicCode

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.vector, self.vector.conj())


def cardinal_coefficients() -> tuple[list[str], np.ndarray]:
    labels, coeffs = [], []
    for a in CARDINAL_LABELS:
        for b in CARDINAL_LABELS:
            labels.append(f"{a},{b}")
            coeffs.append(np.kron(CARDINAL_COEFFS[a], CARDINAL_COEFFS[b]))
    return labels, np.array(coeffs)


def cardinal_states(code: BosonicCode, layout: HilbertLayout) -> list[LogicalTwoQubitState]:
    basis = joint_basis(code, layout)
    labels, coeffs = cardinal_coefficients()
    return [LogicalTwoQubitState(lab, c, c @ basis, code) for lab, c in zip(labels, coeffs)]


# --- syndrome projectors ---------------------------------------------------

def syndrome_mask(code: BosonicCode, layout: HilbertLayout) -> np.ndarray:
    """Diagonal of the syndrome projector M over the full space (0/1 entries)."""
    photons = layout.photon_numbers()
    if code.name == "Fock01":
        return np.ones(layout.dim)
    if code.name in ("Binomial", "FourCat"):
        modes = [m for q in (0, 1) for m in code.qubit_modes(q)]
        return np.all(photons[:, modes] % 2 == 0, axis=1).astype(float)
    # dual-rail: sum of the four logical dyads, i.e. exactly one photon per pair
    ok = np.ones(layout.dim, dtype=bool)
    for q in (0, 1):
        m1, m2 = code.qubit_modes(q)
        pair = photons[:, [m1, m2]]
        ok &= (pair.sum(axis=1) == 1)
    others = [m for m in range(layout.n_modes) if m not in (0, 1, 2, 3)]
    if others:
        ok &= np.all(photons[:, others] == 0, axis=1)
    return ok.astype(float)


def syndrome_projector(code: BosonicCode, layout: HilbertLayout) -> Operator:
    return Operator(layout, np.diag(syndrome_mask(code, layout)))


# --- logical gates ---------------------------------------------------------

_I2 = np.eye(2, dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_ZZ = np.kron(_Z, _Z)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def pauli_rotation(p: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i theta/2 P) for a Hermitian unitary P."""
    return math.cos(theta / 2) * np.eye(p.shape[0]) - 1j * math.sin(theta / 2) * p


def z_rotation(theta: float) -> np.ndarray:
    return pauli_rotation(_Z, theta)


def logical_gate(gate: str, theta: float = 0.0, phi: float = 0.0) -> np.ndarray:
    """4x4 logical unitary; circuits compose left-to-right as drawn."""
    if gate == "ZZ":
        return pauli_rotation(_ZZ, theta)
    if gate in ("eSWAP", "SWAP"):
        return pauli_rotation(_SWAP, theta)
    if gate == "CPHASE":
        local = np.kron(z_rotation(-theta / 2), z_rotation(-theta / 2))
        return pauli_rotation(_ZZ, theta) @ local
    if gate == "iSWAP":
        return pauli_rotation(_SWAP, 2 * theta) @ pauli_rotation(_ZZ, -theta)
    if gate == "fSim":
        local = np.kron(z_rotation(-phi / 2), z_rotation(-phi / 2))
        return pauli_rotation(_SWAP, 2 * theta) @ pauli_rotation(_ZZ, -theta + phi / 2) @ local
    if gate == "I":
        return np.eye(4, dtype=complex)
    raise ValueError(f"unknown logical gate {gate!r}")


def lift(u: np.ndarray, code: BosonicCode, layout: HilbertLayout,
         ancilla: np.ndarray | None = None) -> Operator:
    """sum_ij u_ij |i_L><j_L| (x) ancilla, default ancilla |g><g|."""
    basis = logical_mode_basis(code, layout)
    modes = basis.T @ u @ basis.conj()
    if ancilla is None:
        ancilla = np.zeros((3, 3))
        ancilla[G, G] = 1.0
    return Operator(layout, np.kron(ancilla, modes))


def reference_unitary(gate: str, code: BosonicCode, layout: HilbertLayout,
                      theta: float = 0.0, phi: float = 0.0,
                      ancilla: np.ndarray | None = None) -> Operator:
    return lift(logical_gate(gate, theta, phi), code, layout, ancilla)


def codespace_projector(code: BosonicCode, layout: HilbertLayout, ancilla: np.ndarray | None = None) -> Operator:
    return lift(np.eye(4), code, layout, ancilla)


def reduced_purity(psi4: np.ndarray) -> float:
    """Purity of qubit 0 for a two-qubit logical state vector."""
    m = psi4.reshape(2, 2)
    rho = m @ m.conj().T
    return float(np.real(np.trace(rho @ rho)))


def joint_parity(layout: HilbertLayout, modes: tuple[int, ...], order: int) -> Operator:
    """exp(i pi/order (sum of n over modes)), the ZZ_L operator of a rotation code."""
    diag = np.exp(1j * math.pi / order * layout.photon_numbers()[:, list(modes)].sum(axis=1))
    return Operator(layout, np.diag(diag))

