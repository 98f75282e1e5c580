"""Exact Schroedinger evolution of a compiled machine in the one-cursor sector.

Sector basis: a state with the cursor excitation on site ``q`` (1-based),
counter word index ``c`` and register index ``r`` has flat index
``((q - 1) * 2**K + c) * 2**nu + r``. Counter words use the register bit
convention (``rho_3 = +1`` is bit 0), so the all-``-1`` counter is index
``2**K - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import kernels
from .pathspec import COUNTER_KINDS, CursorGraph, GraphError, Kind
from .spinops import apply_oracle, check_word, initial_register, word_index
from .walkdyn import LAMBDA, chain_amplitudes

DENSE_LIMIT = 4096

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
_RAISE = np.array([[0, 1], [0, 0]], dtype=complex)  # -1 -> +1
_LOWER = np.array([[0, 0], [1, 0]], dtype=complex)  # +1 -> -1
_P_UP = np.diag([1.0, 0.0]).astype(complex)
_P_DOWN = np.diag([0.0, 1.0]).astype(complex)

# switch matrices per control axis, for a control value m = +1
_SWITCH = {
    "z": {Kind.SWITCH_LOWER: _LOWER, Kind.SWITCH_RAISE: _RAISE, Kind.PROJ_PLUS: _P_UP, Kind.PROJ_MINUS: _P_DOWN},
    "x": {
        Kind.SWITCH_LOWER: (_Z + 1j * _Y) / 2,
        Kind.SWITCH_RAISE: (_Z - 1j * _Y) / 2,
        Kind.PROJ_PLUS: (_I2 + _X) / 2,
        Kind.PROJ_MINUS: (_I2 - _X) / 2,
    },
}
_SWITCH_FLIPPED = {Kind.SWITCH_LOWER: _RAISE, Kind.SWITCH_RAISE: _LOWER, Kind.PROJ_PLUS: _P_DOWN, Kind.PROJ_MINUS: _P_UP}


class PropagatorError(RuntimeError):
    def __init__(self, requested: float, achieved: float, detail: str = ""):
        self.requested = requested
        self.achieved = achieved
        super().__init__(f"propagator did not converge: requested tol {requested:g}, achieved {achieved:g}. {detail}")


@dataclass(frozen=True)
class SectorBasis:
    mu: int
    K: int
    s: int

    @property
    def n_register(self) -> int:
        return 2 ** (self.mu + 1)

    @property
    def n_counter(self) -> int:
        return 2**self.K

    @property
    def dim(self) -> int:
        return self.n_register * self.s * self.n_counter

    def index(self, r: int, q: int, c: int) -> int:
        if not (0 <= r < self.n_register and 1 <= q <= self.s and 0 <= c < self.n_counter):
            raise IndexError(f"basis label (r={r}, q={q}, c={c}) out of range")
        return ((q - 1) * self.n_counter + c) * self.n_register + r

    def unravel(self, flat: int) -> tuple[int, int, int]:
        qc, r = divmod(int(flat), self.n_register)
        q0, c = divmod(qc, self.n_counter)
        return r, q0 + 1, c

    def reshape(self, amps: np.ndarray) -> np.ndarray:
        """View amplitudes as ``(..., site, counter, register)``."""
        return amps.reshape(amps.shape[:-1] + (self.s, self.n_counter, self.n_register))

    @property
    def initial_counter(self) -> int:
        return self.n_counter - 1


@dataclass
class SectorState:
    amplitudes: np.ndarray
    basis: SectorBasis

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _embed(op2: np.ndarray, pos: int, n: int) -> sp.csr_matrix:
    """Single-qubit operator on qubit ``pos`` (1-based, least significant first) of ``n`` qubits."""
    return sp.kron(sp.kron(sp.identity(2 ** (n - pos)), sp.csr_matrix(op2)), sp.identity(2 ** (pos - 1)), format="csr")


def _oracle_matrix(mu: int, target) -> sp.csr_matrix:
    d = 2 ** (mu + 1)
    perm = np.arange(d)
    i0 = word_index(target)
    perm[[i0, i0 + (1 << mu)]] = perm[[i0 + (1 << mu), i0]]
    return sp.csr_matrix((np.ones(d, dtype=complex), (perm, np.arange(d))), shape=(d, d))


def _estimator_matrix(mu: int) -> sp.csr_matrix:
    m = 1 << mu
    if m * m > 2**24:
        raise MemoryError(f"explicit estimator for mu={mu} is too large to assemble")
    plus = np.full((m, m), 1.0 / m)
    x_minus_i = np.array([[-1, 1], [1, -1]], dtype=complex)
    return (sp.identity(2 * m, dtype=complex) + sp.kron(x_minus_i, plus)).tocsr()


def label_operator(label, mu: int, K: int, target: Sequence[int] | None = None) -> sp.csr_matrix:
    """Matrix of an edge label on counter (x) register, counter as the high part."""
    nu = mu + 1
    kind = label.kind
    if kind in COUNTER_KINDS:
        op2 = {Kind.COUNTER_RAISE: _RAISE, Kind.COUNTER_LOWER: _LOWER, Kind.COUNTER_X: _X}[kind]
        return sp.kron(_embed(op2, label.k, K), sp.identity(2**nu), format="csr")
    if kind == Kind.DELAY:
        reg = sp.identity(2**nu, dtype=complex, format="csr")
    elif kind == Kind.NOT:
        reg = _embed(_X, nu, nu)
    elif kind == Kind.ORACLE:
        if target is None:
            raise ValueError("OracleA needs a target word")
        reg = _oracle_matrix(mu, target)
    elif kind == Kind.ESTIMATOR:
        reg = _estimator_matrix(mu)
    elif kind in _SWITCH["z"]:
        if label.axis == "x":
            op2 = _SWITCH["x"][kind]
        elif label.axis == "a":
            if target is None:
                raise ValueError(f"{label} needs a target word")
            flip = label.q <= mu and target[label.q - 1] == -1
            op2 = _SWITCH_FLIPPED[kind] if flip else _SWITCH["z"][kind]
        else:
            op2 = _SWITCH["z"][kind]
        reg = _embed(op2, label.q, nu)
    else:
        raise GraphError(f"unknown edge label {label}")
    if kind in (Kind.ORACLE, Kind.ESTIMATOR, Kind.NOT):
        gram = (reg.conj().T @ reg - sp.identity(reg.shape[0])).tocoo()
        if gram.nnz and np.max(np.abs(gram.data)) > 1e-12:
            raise ValueError(f"{label} operator is not unitary")
    return sp.kron(sp.identity(2**K), reg, format="csr")


class SparseHamiltonian:
    """Sector Hamiltonian ``-(lam/2) (F + F^dagger)``; immutable after assembly."""

    def __init__(self, matrix, forward, basis: SectorBasis, lam: float, graph: CursorGraph, target):
        self.matrix = matrix.tocsr()
        self.forward = forward.tocsr()
        self.basis = basis
        self.lam = lam
        self.graph = graph
        self.target = target
        self._eig = None

    @property
    def dim(self) -> int:
        return self.basis.dim

    def entries(self):
        """Nonzero ``(row, col, value)`` triples."""
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def hermiticity_residual(self) -> float:
        diff = (self.matrix - self.matrix.conj().T).tocoo()
        return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0

    def eigh(self):
        if self._eig is None:
            if self.dim > DENSE_LIMIT:
                raise MemoryError(f"dense diagonalisation limited to dim <= {DENSE_LIMIT}, got {self.dim}")
            self._eig = np.linalg.eigh(self.matrix.toarray())
        return self._eig

    def spectral_bounds(self) -> tuple[float, float]:
        """Gershgorin interval containing the spectrum."""
        m = self.matrix.tocsr()
        absrow = np.asarray(abs(m).sum(axis=1)).ravel()
        diag = m.diagonal().real
        off = absrow - np.abs(diag)
        return float(np.min(diag - off)), float(np.max(diag + off))


def assemble(graph: CursorGraph, lam: float = LAMBDA, target: Sequence[int] | None = None) -> SparseHamiltonian:
    """Sector Hamiltonian of a cursor graph: each edge couples cursor sites ``i -> f`` through its label."""
    if lam <= 0:
        raise ValueError("coupling rate must be positive")
    graph.validate()
    if target is not None:
        target = check_word(target, graph.mu)
    elif graph.needs_target():
        raise ValueError("graph contains oracle couplings; a target word is required")
    basis = SectorBasis(graph.mu, graph.K, graph.n_sites)
    s = graph.n_sites
    cache: dict = {}
    fwd = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    blocks = []
    for e in graph.edges:
        if e.label not in cache:
            cache[e.label] = label_operator(e.label, graph.mu, graph.K, target)
        hop = sp.csr_matrix(([1.0], ([e.dst - 1], [e.src - 1])), shape=(s, s))
        blocks.append(sp.kron(hop, cache[e.label], format="csr"))
    if blocks:
        fwd = sum(blocks[1:], blocks[0]).tocsr()
    H = (-lam / 2) * (fwd + fwd.conj().T)
    H.eliminate_zeros()
    return SparseHamiltonian(H, fwd, basis, lam, graph, target)


def initial_state(basis: SectorBasis, register=None, site: int = 1, counter: int | None = None) -> SectorState:
    """Cursor on ``site``, counter all ``-1``, register ``|1>_1`` unless given."""
    reg = initial_register(basis.mu) if register is None else np.asarray(register, dtype=complex)
    if reg.shape != (basis.n_register,):
        raise ValueError("register vector has the wrong dimension")
    amps = np.zeros(basis.dim, dtype=complex)
    c = basis.initial_counter if counter is None else counter
    start = basis.index(0, site, c)
    amps[start : start + basis.n_register] = reg
    return SectorState(amps, basis)


def z_basis_register(bits: Sequence[int]) -> np.ndarray:
    bits = check_word(bits)
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[word_index(bits)] = 1.0
    return v


# ------------------------------------------------------------- propagation


def _chebyshev_step(H: SparseHamiltonian, psi: np.ndarray, t: float, tol: float, max_order: int) -> np.ndarray:
    lo, hi = H.spectral_bounds()
    centre = 0.5 * (hi + lo)
    radius = 0.5 * (hi - lo) * 1.01 + 1e-12
    z = radius * abs(t)
    n = int(z + 30 + 10 * np.cbrt(max(z, 1.0)))
    if n > max_order:
        # bound on the discarded terms at the permitted order
        capped = kernels.jn_table(max_order + 5, z)
        raise PropagatorError(tol, float(2 * np.abs(capped[max_order:]).sum()), f"needs order {n} > {max_order}")
    coef = kernels.jn_table(n, z)
    tail = np.abs(coef[-5:]).sum() * 2
    if tail > tol:
        raise PropagatorError(tol, float(tail), "Chebyshev series truncated")
    keep = int(np.nonzero(np.abs(coef) > tol * 1e-3)[0].max()) + 1
    sign = -1j if t >= 0 else 1j
    A = (H.matrix - centre * sp.identity(H.dim, format="csr")) / radius
    t_prev, t_cur = psi, A @ psi
    out = coef[0] * t_prev + 2 * sign * coef[1] * t_cur
    phase = sign
    for k in range(2, keep):
        t_prev, t_cur = t_cur, 2 * (A @ t_cur) - t_prev
        phase *= sign
        out += 2 * phase * coef[k] * t_cur
    return np.exp(-1j * centre * t) * out


def _chebyshev(H, psi, t, tol, max_order, max_step=40.0):
    lo, hi = H.spectral_bounds()
    width = max(0.5 * (hi - lo), 1e-12)
    nsteps = max(1, int(np.ceil(abs(t) * width / max_step)))
    dt = t / nsteps
    try:
        for _ in range(nsteps):
            psi = _chebyshev_step(H, psi, dt, tol / nsteps, max_order)
    except PropagatorError as exc:
        # report totals over the whole interval
        raise PropagatorError(tol, exc.achieved * nsteps, str(exc).split(". ", 1)[-1]) from None
    return psi


def evolve_state(
    H: SparseHamiltonian, psi0: SectorState, t: float, tol: float = 1e-10, method: str = "auto", max_order: int = 20000
) -> SectorState:
    """``exp(-i H t) psi0``: dense eigendecomposition up to ``DENSE_LIMIT``, Chebyshev beyond."""
    if psi0.basis != H.basis:
        raise ValueError("state and Hamiltonian live in different sector bases")
    if method == "auto":
        method = "dense" if H.dim <= DENSE_LIMIT else "chebyshev"
    if t == 0:
        return SectorState(psi0.amplitudes.copy(), psi0.basis)
    if method == "dense":
        w, v = H.eigh()
        amps = v @ (np.exp(-1j * w * t) * (v.conj().T @ psi0.amplitudes))
    elif method == "chebyshev":
        amps = _chebyshev(H, psi0.amplitudes, float(t), tol, max_order)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SectorState(amps, psi0.basis)


def evolve_series(H: SparseHamiltonian, psi0: SectorState, times, tol: float = 1e-10, method: str = "auto") -> np.ndarray:
    """Amplitudes at every time in ``times`` (shape ``(len(times), dim)``)."""
    times = np.asarray(times, dtype=float)
    if method == "auto":
        method = "dense" if H.dim <= DENSE_LIMIT else "chebyshev"
    if method == "dense":
        w, v = H.eigh()
        coeffs = v.conj().T @ psi0.amplitudes
        return (np.exp(-1j * np.outer(times, w)) * coeffs) @ v.T
    out = np.empty((times.size, H.dim), dtype=complex)
    psi, t_prev = psi0.amplitudes, 0.0
    for i, t in enumerate(times):
        if t != t_prev:
            psi = _chebyshev(H, psi, t - t_prev, tol, 20000)
        out[i] = psi
        t_prev = t
    return out


# ------------------------------------------------------------- observables


def _amps(psi):
    if isinstance(psi, SectorState):
        return psi.amplitudes, psi.basis
    raise TypeError("expected a SectorState")


def site_occupation(amps: np.ndarray, basis: SectorBasis) -> np.ndarray:
    return (np.abs(basis.reshape(amps)) ** 2).sum(axis=(-1, -2))


def expectation_cursor(psi: SectorState) -> float:
    amps, basis = _amps(psi)
    return float(cursor_series(amps, basis))


def cursor_series(amps: np.ndarray, basis: SectorBasis):
    return site_occupation(amps, basis) @ np.arange(1, basis.s + 1)


def counter_series(amps: np.ndarray, basis: SectorBasis, k: int):
    if not 1 <= k <= basis.K:
        raise IndexError(f"counter index {k} outside [1, {basis.K}]")
    occ = (np.abs(basis.reshape(amps)) ** 2).sum(axis=(-1, -3))
    sign = np.where((np.arange(basis.n_counter) >> (k - 1)) & 1, -1.0, 1.0)
    return occ @ sign


def expectation_counter(psi: SectorState, k: int) -> float:
    amps, basis = _amps(psi)
    return float(counter_series(amps, basis, k))


def register_target_series(amps: np.ndarray, basis: SectorBasis, a: Sequence[int]):
    a = check_word(a, basis.mu)
    ia = word_index(a)
    block = basis.reshape(amps)
    m = 1 << basis.mu
    return (np.abs(block[..., ia]) ** 2 + np.abs(block[..., ia + m]) ** 2).sum(axis=(-1, -2))


def prob_register_target(psi: SectorState, a: Sequence[int]) -> float:
    amps, basis = _amps(psi)
    return float(register_target_series(amps, basis, a))


def completed_target_series(amps: np.ndarray, basis: SectorBasis, a: Sequence[int]):
    a = check_word(a, basis.mu)
    ia = word_index(a)
    block = basis.reshape(amps)[..., basis.s - 1, basis.initial_counter, :]
    amp = (block[..., ia] - block[..., ia + (1 << basis.mu)]) / np.sqrt(2.0)
    return np.abs(amp) ** 2


def prob_completed_target(psi: SectorState, a: Sequence[int]) -> float:
    """Probability of cursor on the last site, counter reset, target word with output ``sigma_1 = -1``."""
    amps, basis = _amps(psi)
    return float(completed_target_series(amps, basis, a))


def basis_probability(amps: np.ndarray, basis: SectorBasis, register_index: int, site: int, counter: int | None = None):
    c = basis.initial_counter if counter is None else counter
    return np.abs(amps[..., basis.index(register_index, site, c)]) ** 2


# ------------------------------------------------------ logical path, audits


def logical_path_vectors(H: SparseHamiltonian, psi0: SectorState, tol: float = 1e-12, max_len: int | None = None) -> np.ndarray:
    """Rows ``phi_1 = psi0, phi_{j+1} = F phi_j`` until the forward map annihilates the state."""
    cap = H.dim + 1 if max_len is None else max_len
    rows = [psi0.amplitudes.copy()]
    while len(rows) < cap:
        nxt = H.forward @ rows[-1]
        if np.linalg.norm(nxt) < tol:
            break
        rows.append(nxt)
    return np.array(rows)


def reduced_overlaps(H: SparseHamiltonian, psi0: SectorState, times) -> tuple[np.ndarray, np.ndarray]:
    """Overlaps ``<phi_j|psi(t)>`` and the analytic path amplitudes, both ``(len(times), p)``."""
    phi = logical_path_vectors(H, psi0)
    states = evolve_series(H, psi0, times)
    return states @ phi.conj().T, chain_amplitudes(np.asarray(times, dtype=float), len(phi), H.lam).reshape(len(times), -1)


def _max_abs(m) -> float:
    if sp.issparse(m):
        m = m.tocoo()
        return float(np.max(np.abs(m.data))) if m.nnz else 0.0
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def full_cursor_hamiltonian(graph: CursorGraph, lam: float, target=None) -> sp.csr_matrix:
    """Hamiltonian on all ``2**s`` cursor configurations (small graphs only).

    Cursor spin ``j`` is bit ``j - 1`` with ``tau_3 = +1`` as bit 0; the cursor
    is the most significant factor, then counter, then register.
    """
    s = graph.n_sites
    inner = 2**graph.K * 2 ** (graph.mu + 1)
    H = sp.csr_matrix((2**s * inner, 2**s * inner), dtype=complex)
    for e in graph.edges:
        op = label_operator(e.label, graph.mu, graph.K, target)
        hop = (_embed(_RAISE, e.dst, s) @ _embed(_LOWER, e.src, s)).tocsr()
        term = sp.kron(hop, op, format="csr")
        H = H + term + term.conj().T
    return (-lam / 2) * H


@dataclass
class AuditReport:
    hermiticity: float
    output_commutator: float
    excitation_residual: float
    excitation_method: str
    span_residual: float
    orthonormality: float
    path_length: int
    tol: float = 1e-12
    notes: list[str] = field(default_factory=list)

    def residuals(self) -> dict[str, float]:
        return {
            "hermiticity": self.hermiticity,
            "output_commutator": self.output_commutator,
            "cursor_excitation": self.excitation_residual,
            "path_span": self.span_residual,
            "path_orthonormality": self.orthonormality,
        }

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals().values())

    def format(self) -> str:
        lines = [f"{k:22s} {v:.3e}" for k, v in self.residuals().items()]
        lines.append(f"{'excitation check':22s} {self.excitation_method}")
        lines.append(f"{'logical path length':22s} {self.path_length}")
        lines.extend(self.notes)
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


FULL_SPACE_LIMIT = 2**13


def audit_conservation(H: SparseHamiltonian, psi0: SectorState | None = None, tol: float = 1e-12) -> AuditReport:
    """Numerical residuals of the output-spin, cursor-number and logical-path conservation laws."""
    basis = H.basis
    graph = H.graph
    if psi0 is None:
        psi0 = initial_state(basis)
    # [H, sigma_1(nu)]
    xo = sp.kron(sp.identity(basis.s * basis.n_counter), _embed(_X, basis.mu + 1, basis.mu + 1), format="csr")
    comm_out = _max_abs(H.matrix @ xo - xo @ H.matrix)

    # cursor excitation number
    full_dim = 2**basis.s * basis.n_counter * basis.n_register
    if full_dim <= FULL_SPACE_LIMIT:
        Hf = full_cursor_hamiltonian(graph, H.lam, H.target)
        cursor_idx = np.arange(2**basis.s)
        n_up = np.array([basis.s - bin(c).count("1") for c in cursor_idx], dtype=float)
        N = sp.kron(sp.diags(n_up), sp.identity(basis.n_counter * basis.n_register), format="csr")
        exc = _max_abs(Hf @ N - N @ Hf)
        inner = basis.n_counter * basis.n_register
        rows = []
        for q in range(1, basis.s + 1):
            cur = (2**basis.s - 1) - (1 << (q - 1))
            rows.append(cur * inner + np.arange(inner))
        emb = np.concatenate(rows)
        restricted = Hf[emb][:, emb]
        exc = max(exc, _max_abs(restricted - H.matrix))
        method = f"full cursor space (dim {full_dim})"
    else:
        coo = H.matrix.tocoo()
        _, qr, _ = _unravel_many(basis, coo.row)
        _, qc, _ = _unravel_many(basis, coo.col)
        allowed = {(e.src, e.dst) for e in graph.edges} | {(e.dst, e.src) for e in graph.edges}
        bad = sum(1 for a, b in zip(qr.tolist(), qc.tolist()) if (b, a) not in allowed)
        exc = float(bad)
        method = "structural (single-hop couplings only)"

    phi = logical_path_vectors(H, psi0)
    gram = phi.conj() @ phi.T
    ortho = _max_abs(gram - np.eye(len(phi)))
    q_basis, _ = np.linalg.qr(phi.T)
    image = H.matrix @ phi.T
    leak = image - q_basis @ (q_basis.conj().T @ image)
    span = _max_abs(leak)
    return AuditReport(
        hermiticity=H.hermiticity_residual(),
        output_commutator=comm_out,
        excitation_residual=exc,
        excitation_method=method,
        span_residual=span,
        orthonormality=ortho,
        path_length=len(phi),
        tol=tol,
    )


def _unravel_many(basis: SectorBasis, flat: np.ndarray):
    qc, r = np.divmod(flat, basis.n_register)
    q0, c = np.divmod(qc, basis.n_counter)
    return r, q0 + 1, c


def norm_drift(states: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.norm(states, axis=-1) - 1.0)))


def energy(H: SparseHamiltonian, amps: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("...i,...i->...", amps.conj(), (H.matrix @ amps.T).T))


def grover_register_after(a: Sequence[int], word: str) -> np.ndarray:
    """Register vector ``W |1>_1`` for a time-ordered A/B word (brute force, for checks)."""
    from .spinops import apply_estimator

    a = check_word(a)
    v = initial_register(len(a))
    for ch in word:
        v = apply_oracle(v, a) if ch == "A" else apply_estimator(v)
    return v
