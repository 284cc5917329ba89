"""Error closure: nested commutators of a Hamiltonian with hardware errors.

Operators live on a truncated ``(3, d, d, ...)`` space as sparse matrices.
Span membership is decided on a protected low-photon block, where every
nested commutator up to the requested depth is free of truncation effects:
a word of ``L`` ladder operators applied to states with at most ``n_p``
photons per mode never reaches level ``n_p + L``, so the block is exact
whenever the truncation exceeds ``n_p + L``.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg  # noqa: F401  (sp.linalg.norm)
from scipy.linalg import expm

from .fock import HilbertLayout, Operator, embed, ladder, sigma_gf

SPAN_TOL = 1e-8
NEGLIGIBLE = 1e-12


class ClosureError(ValueError):
    pass


# --- sparse operator algebra -------------------------------------------------------

def _sparse(op) -> sp.csr_matrix:
    if isinstance(op, Operator):
        return sp.csr_matrix(op.matrix)
    return sp.csr_matrix(op, dtype=complex)


def commutator(A, B):
    """AB - BA for Operators (returns Operator) or sparse/dense matrices."""
    if isinstance(A, Operator) and isinstance(B, Operator):
        A._check(B)
        return Operator(A.layout, A.matrix @ B.matrix - B.matrix @ A.matrix)
    A, B = _sparse(A), _sparse(B)
    return (A @ B - B @ A).tocsr()


def sparse_ops(layout: HilbertLayout) -> dict:
    """a, b, ... and sigma_z^{gf} as sparse matrices on ``layout``."""
    names = "abcd"
    out = {}
    for m in range(layout.n_modes):
        out[names[m]] = _sparse(embed(ladder(layout.mode_dims[m]), layout.slot(m), layout))
    out["sz"] = _sparse(embed(sigma_gf("z"), 0, layout))
    out["I"] = sp.identity(layout.dim, dtype=complex, format="csr")
    return out


def protected_indices(layout: HilbertLayout, n_protect: int, ancilla_levels=(0, 2)) -> np.ndarray:
    """Low-photon block restricted to the ancilla g-f manifold by default."""
    photons = layout.photon_numbers()
    ok = np.all(photons <= n_protect, axis=1) & np.isin(layout.ancilla_levels(), ancilla_levels)
    return np.flatnonzero(ok)


# --- error sets ------------------------------------------------------------------

@dataclass
class ErrorSet:
    generators: list
    label: str = ""
    protected: np.ndarray | None = None
    span_basis: np.ndarray = field(default=None)

    def __post_init__(self):
        self.generators = [_sparse(g) for g in self.generators]
        if self.protected is not None and self.span_basis is None:
            self.span_basis = orthonormal_basis([_restrict(g, self.protected) for g in self.generators])

    def with_protected(self, protected: np.ndarray) -> "ErrorSet":
        return ErrorSet(self.generators, self.label, protected)

    @property
    def rank(self) -> int:
        return 0 if self.span_basis is None else self.span_basis.shape[0]

    def residual(self, op) -> float:
        """Relative distance of ``op`` (on the protected block) from the span."""
        v = _restrict(_sparse(op), self.protected)
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        if self.rank == 0:
            return 1.0
        proj = self.span_basis.conj() @ v
        return float(np.linalg.norm(v - self.span_basis.T @ proj) / nv)

    def contains(self, op, tol: float = SPAN_TOL) -> bool:
        return self.residual(op) < tol


def _restrict(op: sp.csr_matrix, idx: np.ndarray) -> np.ndarray:
    return np.asarray(op[idx][:, idx].todense()).reshape(-1)


def orthonormal_basis(vectors, tol: float = SPAN_TOL) -> np.ndarray:
    """Gram-Schmidt (twice) keeping vectors whose relative residual exceeds ``tol``."""
    basis = []
    for v in vectors:
        v = np.asarray(v, dtype=complex)
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w = w - b * (b.conj() @ w)
        if np.linalg.norm(w) / nv > tol:
            basis.append(w / np.linalg.norm(w))
    if not basis:
        return np.zeros((0, 0), dtype=complex)
    return np.array(basis)


def product_set(hardware: list, include_identity: bool = True) -> list:
    """Products of distinct hardware errors (every subset), the identity being the empty product."""
    hw = [_sparse(h) for h in hardware]
    out = []
    n = hw[0].shape[0]
    for r in range(0 if include_identity else 1, len(hw) + 1):
        for combo in itertools.combinations(hw, r):
            p = sp.identity(n, dtype=complex, format="csr")
            for h in combo:
                p = p @ h
            out.append(p.tocsr())
    return out


# --- extended set and verdicts ----------------------------------------------------

@dataclass
class ExtendedSet:
    error_set: ErrorSet
    operators: list          # full truncated operators, one per basis direction
    depth_reached: int
    converged: bool


def generate_extended_set(H, hardware: ErrorSet, max_depth: int = 6) -> ExtendedSet:
    """span(hardware and nested commutators [H, [H, ... e]]) grown breadth-first."""
    if max_depth < 1:
        raise ClosureError("max_depth must be at least 1")
    if hardware.protected is None:
        raise ClosureError("hardware set needs a protected block")
    H = _sparse(H)
    idx = hardware.protected
    basis, ops = [], []

    def add(op) -> bool:
        v = _restrict(op, idx)
        nv = np.linalg.norm(v)
        # operators living only near the truncation edge vanish on the block
        if nv <= NEGLIGIBLE * max(1.0, sp.linalg.norm(op)):
            return False
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w = w - b * (b.conj() @ w)
        if np.linalg.norm(w) / nv <= SPAN_TOL:
            return False
        basis.append(w / np.linalg.norm(w))
        ops.append(op)
        return True

    frontier = [g for g in hardware.generators if add(g)]
    depth = 0
    while frontier and depth < max_depth:
        depth += 1
        frontier = [c for c in (commutator(H, e) for e in frontier) if add(c)]
    converged = not frontier
    es = ErrorSet(ops, "extended", idx, np.array(basis) if basis else np.zeros((0, 0), complex))
    return ExtendedSet(es, ops, depth, converged)


@dataclass
class ClosureVerdict:
    closed: bool
    witness: sp.csr_matrix | None
    witness_residual: float
    extended_rank: int
    depth: int
    converged: bool
    message: str = ""


def check_closure(H, hardware: ErrorSet, correctable: ErrorSet, max_depth: int = 6) -> ClosureVerdict:
    ext = generate_extended_set(H, hardware, max_depth)
    for op in ext.operators:
        r = correctable.residual(op)
        if r >= SPAN_TOL:
            return ClosureVerdict(False, op, r, ext.error_set.rank, ext.depth_reached, ext.converged,
                                  "extended error outside the correctable span")
    if not ext.converged:
        return ClosureVerdict(False, None, 0.0, ext.error_set.rank, ext.depth_reached, False,
                              f"not closed at depth {ext.depth_reached}")
    return ClosureVerdict(True, None, 0.0, ext.error_set.rank, ext.depth_reached, True, "closed")


def guard_layout(max_depth: int, degree: int, n_protect: int = 2, n_modes: int = 2) -> HilbertLayout:
    """Truncation large enough that depth-``max_depth`` words stay exact on the protected block."""
    d = n_protect + 2 + (max_depth + 1) * degree
    return HilbertLayout((d,) * n_modes)


def bch_residual(H, error, correctable: ErrorSet, times) -> list[float]:
    """Residual of exp(-iHt) e exp(iHt) outside the correctable span, per time."""
    Hd = np.asarray(_sparse(H).todense())
    e = np.asarray(_sparse(error).todense())
    out = []
    for t in times:
        u = expm(-1j * Hd * t)
        out.append(correctable.residual(u @ e @ u.conj().T))
    return out


def describe_witness(w: sp.csr_matrix, named: dict, protected: np.ndarray) -> str:
    """Best single-monomial match for a witness, by overlap on the protected block."""
    if w is None:
        return ""
    v = _restrict(w, protected)
    v = v / np.linalg.norm(v)
    best, score = "", 0.0
    for name, op in named.items():
        u = _restrict(op, protected)
        nu = np.linalg.norm(u)
        if nu == 0:
            continue
        s = abs(u.conj() @ v) / nu
        if s > score:
            best, score = name, s
    return f"{best} ({score:.3f})"


# --- the candidate table -------------------------------------------------------------

CANDIDATES = (
    ("a^dag a", True),
    ("a + a^dag", True),
    ("a b^dag + a^dag b", True),
    ("a^dag b^dag + a b", False),
    ("a^dag^2 + a^2", False),
    ("a^dag a (b + b^dag)", False),
    ("(a + a^dag) b^dag b", False),
)


def candidate_hamiltonian(name: str, ops: dict):
    a, b = ops["a"], ops["b"]
    ad, bd = a.conj().T, b.conj().T
    table = {
        "a^dag a": ad @ a,
        "a + a^dag": a + ad,
        "a b^dag + a^dag b": a @ bd + ad @ b,
        "a^dag b^dag + a b": ad @ bd + a @ b,
        "a^dag^2 + a^2": ad @ ad + a @ a,
        "a^dag a (b + b^dag)": ad @ a @ (b + bd),
        "(a + a^dag) b^dag b": (a + ad) @ bd @ b,
    }
    return table[name].tocsr()


@dataclass(frozen=True)
class CandidateRow:
    hamiltonian: str
    with_sigma_z: bool
    expected: bool
    closed: bool
    witness: str
    extended_rank: int
    message: str

    @property
    def matches(self) -> bool:
        return self.closed == self.expected


def candidate_report(max_depth: int = 4, n_protect: int = 2, include_sigma_z: bool = True) -> list[CandidateRow]:
    """Verdicts for each candidate, bare and tensored with sigma_z^{gf}."""
    layout = guard_layout(max_depth, 3, n_protect)
    ops = sparse_ops(layout)
    idx = protected_indices(layout, n_protect)
    a, b, sz = ops["a"], ops["b"], ops["sz"]
    named = {"a": a, "b": b, "a^dag": a.conj().T, "b^dag": b.conj().T, "1": ops["I"],
             "a b": a @ b, "a b^dag": a @ b.conj().T, "b^dag b": b.conj().T @ b,
             "a^dag b": a.conj().T @ b, "a^2": a @ a, "b^2": b @ b}
    named.update({f"{k} sz": (v @ sz).tocsr() for k, v in list(named.items())})
    rows = []
    variants = (False, True) if include_sigma_z else (False,)
    for with_sz in variants:
        hw_ops = [a, b, sz] if with_sz else [a, b]
        hardware = ErrorSet(hw_ops, "hardware", idx)
        correctable = ErrorSet(product_set(hw_ops), "correctable", idx)
        for name, expected in CANDIDATES:
            H = candidate_hamiltonian(name, ops)
            if with_sz:
                H = (H @ sz).tocsr()
            v = check_closure(H, hardware, correctable, max_depth)
            rows.append(CandidateRow(f"({name}) (x) sz" if with_sz else name, with_sz, expected, v.closed,
                                     describe_witness(v.witness, named, idx), v.extended_rank, v.message))
    return rows


def report_markdown(rows) -> str:
    lines = ["| H0 | closed | expected | witness | ext rank |", "|---|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r.hamiltonian} | {'yes' if r.closed else 'no'} | "
                     f"{'yes' if r.expected else 'no'} | {r.witness or '-'} | {r.extended_rank} |")
    return "\n".join(lines) + "\n"


def report_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hamiltonian", "with_sigma_z", "closed", "expected", "witness", "extended_rank"])
    for r in rows:
        w.writerow([r.hamiltonian, int(r.with_sigma_z), int(r.closed), int(r.expected), r.witness,
                    r.extended_rank])
    return buf.getvalue()


# --- worked examples ---------------------------------------------------------------

def _setup(max_depth: int, degree: int, n_protect: int):
    layout = guard_layout(max_depth, degree, n_protect)
    return layout, sparse_ops(layout), protected_indices(layout, n_protect)


def example_beamsplitter(g: float = 1.0, max_depth: int = 6, n_protect: int = 2):
    """Photon loss under a beamsplitter: (extended set, expected span{a, b}, correctable set)."""
    _, ops, idx = _setup(max_depth, 2, n_protect)
    a, b = ops["a"], ops["b"]
    H = (g / 2) * (a.conj().T @ b + a @ b.conj().T)
    hw = ErrorSet([a, b], "hardware", idx)
    ext = generate_extended_set(H, hw, max_depth)
    expected = ErrorSet([a, b], "span{a, b}", idx)
    return ext, expected, ErrorSet(product_set([a, b]), "correctable", idx), H


def example_dispersive_beamsplitter(g: float = 1.0, delta: float = 0.37, chi: float = -0.61,
                                    max_depth: int = 6, n_protect: int = 2):
    """Loss and g-f dephasing under the dispersive beamsplitter."""
    _, ops, idx = _setup(max_depth, 2, n_protect)
    a, b, sz = ops["a"], ops["b"], ops["sz"]
    H = (g / 2) * (a.conj().T @ b + a @ b.conj().T) + (delta * ops["I"] + (chi / 2) * sz) @ a.conj().T @ a
    hw = ErrorSet([a, b, sz], "hardware", idx)
    ext = generate_extended_set(H.tocsr(), hw, max_depth)
    expected = ErrorSet([a, b, sz, a @ sz, b @ sz], "span{a, b, sz, a sz, b sz}", idx)
    return ext, expected, ErrorSet(product_set([a, b, sz]), "correctable", idx), H.tocsr()


def same_span(x: ErrorSet, y: ErrorSet) -> bool:
    return x.rank == y.rank and all(y.contains(g) for g in x.generators) \
        and all(x.contains(g) for g in y.generators)


def bch_check(name: str, with_sigma_z: bool = False, times=(0.1, 1.0, 10.0), n_protect: int = 2,
              layout: HilbertLayout | None = None) -> dict:
    """Largest residual over hardware errors and times t/||H|| for a candidate Hamiltonian."""
    if layout is None:
        layout = HilbertLayout((30, 3)) if name == "a + a^dag" else HilbertLayout((8, 8))
    ops = sparse_ops(layout)
    idx = protected_indices(layout, n_protect)
    H = candidate_hamiltonian(name, ops)
    hw_ops = [ops["a"], ops["b"]]
    if with_sigma_z:
        H = (H @ ops["sz"]).tocsr()
        hw_ops.append(ops["sz"])
    corr = ErrorSet(product_set(hw_ops), "correctable", idx)
    norm = float(np.linalg.norm(np.asarray(H.todense()), 2))
    worst = {}
    for t in times:
        worst[t] = max(max(bch_residual(H, e, corr, [t / norm])) for e in hw_ops)
    return worst
