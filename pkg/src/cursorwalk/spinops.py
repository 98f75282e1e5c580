"""Register operators for the Grover machines.

Basis convention shared by every module: a register of ``nu = mu + 1`` spins
is stored as a complex vector of length ``2**nu`` over ``sigma_3``
eigenstates. Qubit ``i`` (1-based) is bit ``i - 1`` of the index, so qubit 1
is least significant and the output qubit ``nu`` is most significant. Spin
value ``+1`` is bit 0, spin value ``-1`` is bit 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MU_MAX = 12


def check_mu(mu: int) -> int:
    mu = int(mu)
    if not 1 <= mu <= MU_MAX:
        raise ValueError(f"register width mu must be in [1, {MU_MAX}], got {mu}")
    return mu


def check_word(a: Sequence[int], mu: int | None = None) -> tuple[int, ...]:
    """Validate a +/-1 word, returning it as a tuple."""
    bits = tuple(int(b) for b in a)
    if not bits:
        raise ValueError("word must have at least one entry")
    if any(b not in (-1, 1) for b in bits):
        raise ValueError(f"word entries must be +1 or -1, got {bits}")
    if mu is not None and len(bits) != mu:
        raise ValueError(f"word has length {len(bits)}, expected {mu}")
    return bits


def parse_word(text: str) -> tuple[int, ...]:
    """Parse ``"+-+"`` or ``"1,-1,1"`` into a +/-1 tuple."""
    text = text.strip()
    if text and set(text) <= {"+", "-"}:
        return check_word([1 if c == "+" else -1 for c in text])
    return check_word([int(v) for v in text.replace(",", " ").split()])


def format_word(bits: Sequence[int]) -> str:
    return "".join("+" if b == 1 else "-" for b in bits)


def word_index(bits: Sequence[int]) -> int:
    """Index of a z-basis word (qubit 1 least significant, +1 -> bit 0)."""
    idx = 0
    for i, b in enumerate(bits):
        if b == -1:
            idx |= 1 << i
    return idx


def index_word(index: int, n: int) -> tuple[int, ...]:
    return tuple(-1 if (index >> i) & 1 else 1 for i in range(n))


def _as_register(state, mu: int) -> np.ndarray:
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (2 ** (mu + 1),):
        raise ValueError(f"register state must have dimension 2**{mu + 1} = {2 ** (mu + 1)}, got shape {psi.shape}")
    return psi


def apply_oracle(state, a: Sequence[int]) -> np.ndarray:
    """Flip the output qubit on the z-basis component whose input word equals ``a``."""
    a = check_word(a)
    mu = len(a)
    psi = _as_register(state, mu)
    out = psi.copy()
    i0 = word_index(a)
    i1 = i0 + (1 << mu)
    out[i0], out[i1] = psi[i1], psi[i0]
    return out


def apply_estimator(state, mu: int | None = None) -> np.ndarray:
    """Flip the output qubit on the x-basis component with all inputs +1.

    Uses ``I + (X_out - I) (x) P_plus`` with ``P_plus`` the projector on the
    uniform input state, so the cost is O(2**nu).
    """
    psi = np.asarray(state, dtype=complex)
    if mu is None:
        n = psi.size.bit_length() - 1
        if psi.ndim != 1 or psi.size != 1 << n or n < 2:
            raise ValueError(f"register state must have dimension 2**nu with nu >= 2, got shape {psi.shape}")
        mu = n - 1
    psi = _as_register(psi, mu)
    m = 1 << mu
    v = psi.reshape(2, m)
    sums = v.sum(axis=1)
    out = v + ((sums[::-1] - sums) / m)[:, None]
    return out.reshape(-1)


@dataclass(frozen=True)
class GroverCoeffs:
    chi: float
    alpha_n: float
    beta_n: float
    n: int
    mu: int


def grover_angle(mu: int) -> float:
    return float(np.arcsin(2.0 ** (-mu / 2.0)))


def grover_coefficients(n: int, mu: int) -> GroverCoeffs:
    """Amplitudes of the target and of each non-target word after ``n`` rounds of BA."""
    if n < 0:
        raise ValueError("iteration count must be >= 0")
    mu = check_mu(mu)
    chi = grover_angle(mu)
    sign = -1.0 if n % 2 else 1.0
    phase = (2 * n + 1) * chi
    alpha = sign * np.sin(phase)
    beta = sign * np.cos(phase) / np.sqrt(2.0**mu - 1.0)
    return GroverCoeffs(chi=chi, alpha_n=float(alpha), beta_n=float(beta), n=int(n), mu=mu)


def output_minus(mu: int) -> np.ndarray:
    """Output-qubit factor ``|sigma_1(nu) = -1>`` in the z basis, laid out on the high bit."""
    v = np.zeros(2 ** (mu + 1), dtype=complex)
    v[: 1 << mu] = 1.0
    v[1 << mu :] = -1.0
    return v / np.sqrt(2.0)


def initial_register(mu: int) -> np.ndarray:
    """``|sigma_1(i) = +1 for all inputs, sigma_1(nu) = -1>``."""
    mu = check_mu(mu)
    return output_minus(mu) / np.sqrt(2.0**mu)


def register_from_words(word_amplitudes, mu: int) -> np.ndarray:
    """Embed input-word amplitudes (length ``2**mu``) with the output in ``|sigma_1 = -1>``."""
    w = np.asarray(word_amplitudes, dtype=complex)
    if w.shape != (1 << mu,):
        raise ValueError(f"expected {1 << mu} word amplitudes, got shape {w.shape}")
    return np.concatenate([w, -w]) / np.sqrt(2.0)


def input_amplitudes(state, mu: int) -> np.ndarray:
    """Project the output qubit onto ``|sigma_1 = -1>`` and return the input-word amplitudes."""
    psi = _as_register(state, mu).reshape(2, 1 << mu)
    return (psi[0] - psi[1]) / np.sqrt(2.0)


def grover_state(n: int, mu: int, a: Sequence[int], extra_oracle: bool = False) -> np.ndarray:
    """Closed form of ``(BA)**n |1>_1`` (or ``A (BA)**n |1>_1``) as a register vector."""
    a = check_word(a, check_mu(mu))
    c = grover_coefficients(n, mu)
    words = np.full(1 << mu, c.beta_n, dtype=complex)
    words[word_index(a)] = -c.alpha_n if extra_oracle else c.alpha_n
    return register_from_words(words, mu)
