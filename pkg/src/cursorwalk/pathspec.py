"""Cursor coupling graphs for the Grover machines and their logical paths.

A forward edge ``(i, f, label)`` stands for the Hamiltonian term
``O_label (x) tau_+(f) tau_-(i)``; the full Hamiltonian adds the adjoint of
every forward term. Loop-back handles are forward edges with ``f < i``.

Switch labels carry a control axis:

* ``z``: control on ``sigma_3``; the "lowering" switch takes ``+1 -> -1``.
* ``x``: control on ``sigma_1`` (estimator networks).
* ``a``: control on ``a_q sigma_3``; the lowering switch takes ``a_q -> -a_q``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple, Sequence

from .spinops import check_word


class Kind(str, Enum):
    ORACLE = "OracleA"
    ESTIMATOR = "EstimatorB"
    NOT = "NotOutput"
    SWITCH_LOWER = "SwitchLower"
    SWITCH_RAISE = "SwitchRaise"
    PROJ_PLUS = "ProjectorPlus"
    PROJ_MINUS = "ProjectorMinus"
    DELAY = "Delay"
    COUNTER_RAISE = "CounterRaise"
    COUNTER_LOWER = "CounterLower"
    COUNTER_X = "CounterX"


QUBIT_KINDS = frozenset({Kind.SWITCH_LOWER, Kind.SWITCH_RAISE, Kind.PROJ_PLUS, Kind.PROJ_MINUS})
COUNTER_KINDS = frozenset({Kind.COUNTER_RAISE, Kind.COUNTER_LOWER, Kind.COUNTER_X})
AXES = ("z", "x", "a")


class GraphError(ValueError):
    """Malformed graph, label, or graph file."""


class NotAComputationError(ValueError):
    """The forward map does not send basis labels to single basis labels."""


@dataclass(frozen=True)
class EdgeLabel:
    kind: Kind
    q: int | None = None
    k: int | None = None
    axis: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind in QUBIT_KINDS:
            if self.q is None or self.axis not in AXES:
                raise GraphError(f"{self.kind.value} needs a qubit index and an axis in {AXES}")
        elif self.kind in COUNTER_KINDS:
            if self.k is None:
                raise GraphError(f"{self.kind.value} needs a counter index")

    def __str__(self) -> str:
        if self.kind in QUBIT_KINDS:
            return f"{self.kind.value}({self.q},{self.axis})"
        if self.kind in COUNTER_KINDS:
            return f"{self.kind.value}({self.k})"
        return self.kind.value

    @classmethod
    def parse(cls, token: str) -> "EdgeLabel":
        m = re.fullmatch(r"(\w+)(?:\(([^)]*)\))?", token.strip())
        if not m:
            raise GraphError(f"cannot parse edge label {token!r}")
        name, args = m.group(1), m.group(2)
        try:
            kind = Kind(name)
        except ValueError:
            raise GraphError(f"unknown edge label {name!r}") from None
        parts = [p.strip() for p in args.split(",")] if args else []
        try:
            if kind in QUBIT_KINDS:
                if len(parts) != 2:
                    raise GraphError(f"{name} takes (qubit, axis), got {token!r}")
                return cls(kind, q=int(parts[0]), axis=parts[1])
            if kind in COUNTER_KINDS:
                if len(parts) != 1:
                    raise GraphError(f"{name} takes (counter), got {token!r}")
                return cls(kind, k=int(parts[0]))
        except ValueError as exc:
            raise GraphError(f"bad label arguments in {token!r}: {exc}") from None
        if parts:
            raise GraphError(f"{name} takes no arguments, got {token!r}")
        return cls(kind)


A = EdgeLabel(Kind.ORACLE)
B = EdgeLabel(Kind.ESTIMATOR)
NOT = EdgeLabel(Kind.NOT)
DELAY = EdgeLabel(Kind.DELAY)


class Edge(NamedTuple):
    src: int
    dst: int
    label: EdgeLabel


@dataclass
class CursorGraph:
    n_sites: int
    edges: list[Edge]
    mu: int
    K: int = 0
    name: str = ""
    meta: dict = field(default_factory=dict)

    def validate(self) -> "CursorGraph":
        if self.n_sites < 1:
            raise GraphError("graph needs at least one site")
        seen = set()
        nu = self.mu + 1
        for e in self.edges:
            if not (1 <= e.src <= self.n_sites and 1 <= e.dst <= self.n_sites):
                raise GraphError(f"edge {e.src}->{e.dst} leaves the site range [1, {self.n_sites}]")
            if e.src == e.dst:
                raise GraphError(f"self-loop at site {e.src}")
            lab = e.label
            if lab.q is not None and not 1 <= lab.q <= nu:
                raise GraphError(f"qubit index {lab.q} outside [1, {nu}]")
            if lab.k is not None and not 1 <= lab.k <= self.K:
                raise GraphError(f"counter index {lab.k} outside [1, {self.K}]")
            if e in seen:
                raise GraphError(f"duplicate forward term {e.src} {e.dst} {lab}")
            seen.add(e)
        return self

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def out_edges(self) -> dict[int, list[Edge]]:
        adj: dict[int, list[Edge]] = {}
        for e in self.edges:
            adj.setdefault(e.src, []).append(e)
        return adj

    def needs_target(self) -> bool:
        return any(e.label.kind == Kind.ORACLE or e.label.axis == "a" for e in self.edges)

    def to_text(self) -> str:
        lines = [f"sites={self.n_sites} mu={self.mu} K={self.K}"]
        lines.extend(f"{e.src} {e.dst} {e.label}" for e in self.edges)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CursorGraph":
        rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows:
            raise GraphError("empty graph file")
        header = dict(tok.split("=", 1) for tok in rows[0].split() if "=" in tok)
        try:
            n_sites, mu, K = int(header["sites"]), int(header["mu"]), int(header["K"])
        except (KeyError, ValueError):
            raise GraphError(f"bad header line {rows[0]!r}; expected 'sites=<s> mu=<mu> K=<K>'") from None
        edges = []
        for ln in rows[1:]:
            parts = ln.split(None, 2)
            if len(parts) != 3:
                raise GraphError(f"bad edge line {ln!r}")
            try:
                src, dst = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphError(f"bad site numbers in {ln!r}") from None
            edges.append(Edge(src, dst, EdgeLabel.parse(parts[2])))
        return cls(n_sites, edges, mu, K).validate()


# ---------------------------------------------------------------- builders


def build_linear_chain(mu: int, s: int) -> CursorGraph:
    """Chain of ``s`` sites; odd links carry A, even links carry B."""
    if s < 1:
        raise GraphError("chain length must be >= 1")
    edges = [Edge(j, j + 1, A if j % 2 else B) for j in range(1, s)]
    return CursorGraph(s, edges, mu, 0, name=f"chain(mu={mu},s={s})").validate()


def subroutine_sites(K: int) -> int:
    return 4 * K + 3


def _subroutine_edges(j: int, i: int) -> list[Edge]:
    """Forward terms of ``h_j(i, i + 4j + 2)``, in the order they are written."""
    if j == 0:
        return [Edge(i, i + 1, A), Edge(i + 1, i + 2, B)]
    rp = EdgeLabel(Kind.COUNTER_RAISE, k=j)
    rx = EdgeLabel(Kind.COUNTER_X, k=j)
    rm = EdgeLabel(Kind.COUNTER_LOWER, k=j)
    end = i + 4 * j
    return [
        Edge(i, i + 1, rp),
        Edge(i + 1, i + 2, rx),
        *_subroutine_edges(j - 1, i + 2),
        Edge(end, end + 2, rm),
        Edge(end, end + 1, rp),
        Edge(end + 1, i + 1, rm),
    ]


def build_subroutine_machine(K: int, mu: int = 1) -> CursorGraph:
    """Cursor graph that applies BA ``2**K`` times using ``4K + 3`` sites and ``K`` counter spins."""
    if K < 0:
        raise GraphError("K must be >= 0")
    return CursorGraph(subroutine_sites(K), _subroutine_edges(K, 1), mu, K, name=f"subroutine(K={K})").validate()


def cnot_sites(mu: int) -> int:
    return (mu + 1) * (mu + 2)


def cnot_path_length(mu: int) -> int:
    return 2 * (mu + 1)


def _cnot_edges(mu: int, j: int, axis: str, variant: str) -> list[Edge]:
    """Forward terms of ``c^mu not(j, j + s_mu - 1)``; ``mu = 0`` is the bare output NOT."""
    if mu == 0:
        return [Edge(j, j + 1, NOT)]
    s_prev, t_prev = cnot_sites(mu - 1), cnot_path_length(mu - 1)
    last = j + cnot_sites(mu) - 1
    if variant == "projector":
        up_in = up_out = EdgeLabel(Kind.PROJ_PLUS, q=mu, axis=axis)
        lo_in = lo_out = EdgeLabel(Kind.PROJ_MINUS, q=mu, axis=axis)
    else:
        up_in = EdgeLabel(Kind.SWITCH_LOWER, q=mu, axis=axis)
        up_out = EdgeLabel(Kind.SWITCH_RAISE, q=mu, axis=axis)
        lo_in, lo_out = up_out, up_in
    delay_start = j + s_prev + 1
    return [
        Edge(j, j + 1, up_in),
        *_cnot_edges(mu - 1, j + 1, axis, variant),
        Edge(j + s_prev, last, up_out),
        Edge(j, delay_start, lo_in),
        *(Edge(delay_start + k - 1, delay_start + k, DELAY) for k in range(1, t_prev)),
        Edge(j + s_prev + t_prev, last, lo_out),
    ]


VARIANTS = ("raiselower", "projector")


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise GraphError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return variant


def build_cnot_network(mu: int, basis: str = "z", variant: str = "raiselower") -> CursorGraph:
    """Local c^mu-NOT network on ``(mu+1)(mu+2)`` sites built from SWITCH and NOT links."""
    if mu < 1:
        raise GraphError("mu must be >= 1")
    if basis not in AXES:
        raise GraphError(f"basis must be one of {AXES}, got {basis!r}")
    _check_variant(variant)
    g = CursorGraph(cnot_sites(mu), _cnot_edges(mu, 1, basis, variant), mu, 0, name=f"c{mu}not({basis},{variant})")
    return g.validate()


def build_full_machine(mu: int, K: int, variant: str = "raiselower") -> CursorGraph:
    """Subroutine skeleton with its A and B links replaced by local networks.

    Sites are numbered along the skeleton with each network's interior
    inserted in place, so for ``mu=3, K=1`` the oracle network spans sites
    3..22, the estimator network 22..41, and the machine ends at site 43.
    """
    if mu < 1 or K < 0:
        raise GraphError("need mu >= 1 and K >= 0")
    _check_variant(variant)
    s_net = cnot_sites(mu)
    extra = s_net - 2
    a_src = 2 * K + 1  # the innermost h_0 sits on skeleton sites 2K+1 .. 2K+3

    def renumber(site: int) -> int:
        if site <= a_src:
            return site
        if site == a_src + 1:
            return site + extra
        return site + 2 * extra

    edges: list[Edge] = []
    for e in _subroutine_edges(K, 1):
        if e.label.kind == Kind.ORACLE:
            edges.extend(_cnot_edges(mu, renumber(e.src), "a", variant))
        elif e.label.kind == Kind.ESTIMATOR:
            edges.extend(_cnot_edges(mu, renumber(e.src), "x", variant))
        else:
            edges.append(Edge(renumber(e.src), renumber(e.dst), e.label))
    n = subroutine_sites(K) + 2 * extra
    return CursorGraph(n, edges, mu, K, name=f"full(mu={mu},K={K},{variant})").validate()


def full_machine_path_length(mu: int, K: int) -> int:
    """Logical path length of the full machine: every A and B pass costs ``T_mu - 1`` steps."""
    return path_length(K) + 2 ** (K + 1) * (cnot_path_length(mu) - 2)


# ------------------------------------------------------------ combinatorics


def path_length(K: int) -> int:
    """Number of logical successors (including the start) of the subroutine machine."""
    if K < 0:
        raise ValueError("K must be >= 0")
    return 2 ** (K + 3) - 5


def two_adic_valuation(x: int) -> int:
    if x <= 0:
        raise ValueError("valuation defined for positive integers only")
    return (x & -x).bit_length() - 1


def oracle_call_indices(K: int) -> list[int]:
    """Path positions ``j_i`` (1-based) where the register receives an extra A."""
    if K < 0:
        raise ValueError("K must be >= 0")
    out = []
    acc = 0
    base = 2 * K + 2
    for i in range(1, 2**K + 1):
        if i > 1:
            acc += two_adic_valuation(i - 1)
        out.append(base + 5 * (i - 1) + 3 * acc)
    return out


def _check_j(K: int, j: int) -> None:
    if not 1 <= j <= path_length(K):
        raise ValueError(f"path index j={j} outside [1, {path_length(K)}]")


def steps_exact(K: int, j: int) -> int:
    """Completed BA rounds at path position ``j``."""
    _check_j(K, j)
    return sum(1 for ji in oracle_call_indices(K) if ji < j)


def steps_approx(K: int, j: int) -> float:
    """Piecewise-linear stand-in for :func:`steps_exact`."""
    _check_j(K, j)
    p = path_length(K)
    if j <= 2 * K + 2:
        return 0.0
    if j >= p - K:
        return float(2**K)
    return 1.0 + (2**K - 1) / (p - 3 * K - 3) * (j - (2 * K + 3))


# -------------------------------------------------------- logical successors


@dataclass(frozen=True)
class PathEntry:
    site: int
    counter: tuple[int, ...]
    eps: int | None
    n: int | None
    register: object
    phase: complex = 1

    def key(self):
        return (self.site, self.counter, self.register)


@dataclass
class LogicalPath:
    entries: list[PathEntry]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def sites(self) -> list[int]:
        return [e.site for e in self.entries]

    @property
    def eps(self) -> list[int | None]:
        return [e.eps for e in self.entries]

    @property
    def ns(self) -> list[int | None]:
        return [e.n for e in self.entries]


def _word_exponents(word: str) -> tuple[int | None, int | None]:
    """``A^eps (BA)^n`` exponents of a time-ordered A/B word, or ``(None, None)``."""
    expected = "AB" * (len(word) // 2 + 1)
    if word != expected[: len(word)]:
        return None, None
    return len(word) % 2, len(word) // 2


def _flip_counter(counter, k, need):
    v = counter[k - 1]
    if need is not None and v != need:
        return None
    return counter[: k - 1] + (-v,) + counter[k:]


def _apply_counter(label: EdgeLabel, counter):
    if label.kind == Kind.COUNTER_RAISE:
        return _flip_counter(counter, label.k, -1)
    if label.kind == Kind.COUNTER_LOWER:
        return _flip_counter(counter, label.k, 1)
    return _flip_counter(counter, label.k, None)


def _apply_abstract(label: EdgeLabel, word: str):
    """Register given as ``W |1>_1`` with ``W`` a word in A and B."""
    if label.kind == Kind.ORACLE:
        return word + "A", 1
    if label.kind == Kind.ESTIMATOR:
        return word + "B", 1
    if label.kind == Kind.NOT:
        return word, -1  # sigma_1(nu) = -1 is conserved
    if label.kind == Kind.DELAY:
        return word, 1
    raise NotAComputationError(f"{label} maps the register state W|1>_1 to a superposition of basis labels")


def _apply_basis(label: EdgeLabel, reg, target):
    """Register given per qubit as ``((axis, value), ...)`` with axis 'z' or 'x'."""
    kind = label.kind
    if kind == Kind.DELAY:
        return reg, 1
    nu = len(reg)
    if kind == Kind.NOT:
        axis, v = reg[nu - 1]
        if axis == "z":
            return reg[: nu - 1] + (("z", -v),), 1
        return reg, v
    if kind in (Kind.ORACLE, Kind.ESTIMATOR):
        need = "z" if kind == Kind.ORACLE else "x"
        if any(ax != need for ax, _ in reg[: nu - 1]):
            raise NotAComputationError(f"{label} on a register not in the {need} basis")
        if kind == Kind.ORACLE:
            if target is None:
                raise ValueError("OracleA needs a target word")
            match = tuple(v for _, v in reg[: nu - 1]) == tuple(target)
        else:
            match = all(v == 1 for _, v in reg[: nu - 1])
        if not match:
            return reg, 1
        return _apply_basis(NOT, reg, target)
    # single-qubit switches and projectors
    q = label.q
    qaxis, v = reg[q - 1]
    want = "x" if label.axis == "x" else "z"
    if qaxis != want:
        raise NotAComputationError(f"{label} on qubit {q} held in the {qaxis} basis")
    if label.axis == "a":
        if target is None:
            raise ValueError(f"{label} needs a target word")
        m = target[q - 1] if q <= len(target) else 1
    else:
        m = 1
    if kind == Kind.SWITCH_LOWER:
        new = -m if v == m else None
    elif kind == Kind.SWITCH_RAISE:
        new = m if v == -m else None
    elif kind == Kind.PROJ_PLUS:
        new = v if v == m else None
    else:
        new = v if v == -m else None
    if new is None:
        return None, 0
    return reg[: q - 1] + ((qaxis, new),) + reg[q:], 1


def z_register(bits: Sequence[int]) -> tuple:
    return tuple(("z", int(b)) for b in check_word(bits))


def x_register(bits: Sequence[int]) -> tuple:
    return tuple(("x", int(b)) for b in check_word(bits))


def enumerate_successors(
    graph: CursorGraph,
    initial_counter: Sequence[int] | None = None,
    register=None,
    target: Sequence[int] | None = None,
    max_steps: int | None = None,
) -> LogicalPath:
    """Walk the forward map from the cursor at site 1.

    ``register=None`` tracks the register symbolically as ``W |1>_1`` for an
    A/B word ``W`` and fills in the ``eps``/``n`` exponents. Otherwise
    ``register`` is a per-qubit basis label such as ``z_register(...)``.
    """
    counter = tuple(initial_counter) if initial_counter is not None else (-1,) * graph.K
    if len(counter) != graph.K:
        raise ValueError(f"counter word must have length K={graph.K}")
    abstract = register is None
    reg = "" if abstract else tuple(register)
    if target is not None:
        target = check_word(target, graph.mu)
    if max_steps is None:
        max_steps = 4 * graph.n_sites * 2**graph.K * (2 ** (graph.mu + 2)) + 8

    def entry(site, counter, reg, phase):
        eps, n = _word_exponents(reg) if abstract else (None, None)
        return PathEntry(site, counter, eps, n, reg, phase)

    site, phase = 1, 1
    entries = [entry(site, counter, reg, phase)]
    seen = {entries[0].key()}
    seen_cursor = {(site, counter)}
    while True:
        images = []
        for e in graph.out_edges.get(site, []):
            lab = e.label
            if lab.kind in COUNTER_KINDS:
                new_c, new_r, ph = _apply_counter(lab, counter), reg, 1
                if new_c is None:
                    continue
            else:
                new_c = counter
                new_r, ph = _apply_abstract(lab, reg) if abstract else _apply_basis(lab, reg, target)
                if ph == 0:
                    continue
            images.append((e.dst, new_c, new_r, ph))
        if not images:
            break
        if len(images) > 1:
            raise NotAComputationError(
                f"forward map from site {site} yields {len(images)} basis labels: {[i[0] for i in images]}"
            )
        site, counter, reg, ph = images[0]
        phase *= ph
        ent = entry(site, counter, reg, phase)
        if ent.key() in seen:
            raise NotAComputationError(f"forward map cycles back to {ent.key()}")
        if abstract and (site, counter) in seen_cursor:
            raise NotAComputationError(f"cursor/counter label {(site, counter)} repeats; orthogonality not certified")
        seen.add(ent.key())
        seen_cursor.add((site, counter))
        entries.append(ent)
        if len(entries) > max_steps:
            raise NotAComputationError("forward map did not terminate")
    return LogicalPath(entries)
