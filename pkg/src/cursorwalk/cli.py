"""Command-line scenario runner.

Commands: ``figure <id>``, ``compile``, ``audit``, ``peaks``, ``simulate``.
CSV files go to ``--outdir``, else ``$CURSORWALK_OUTDIR``, else the working
directory. Parameters come from flags, optionally layered over a
``key=value`` file given with ``--config`` (flags win).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import evolve as ev
from . import kernels
from . import pathspec as ps
from . import walkdyn as wd
from .spinops import check_word, format_word, parse_word, word_index

OUTDIR_ENV = "CURSORWALK_OUTDIR"
MACHINES = ("chain", "subroutine", "cnot", "ccnot", "full")
FIGURES = (1, 3, 7, 11, 13, 14, 15, 16, 17)


class ConfigError(ValueError):
    pass


def default_target(mu: int) -> tuple[int, ...]:
    return tuple(1 if i % 2 == 0 else -1 for i in range(mu))


@dataclass
class ScenarioConfig:
    machine: str = "chain"
    mu: int = 2
    K: int = 0
    s: int = 9
    lam: float = wd.LAMBDA
    variant: str = "raiselower"
    basis: str = "z"
    target: tuple[int, ...] | None = None
    t_min: float = 0.0
    t_max: float = 20.0
    step: float = 0.25
    outputs: tuple[str, ...] = ()

    def validate(self) -> "ScenarioConfig":
        if self.machine not in MACHINES:
            raise ConfigError(f"machine must be one of {MACHINES}, got {self.machine!r}")
        if self.mu < 1 or self.K < 0 or self.s < 1:
            raise ConfigError("need mu >= 1, K >= 0, s >= 1")
        if self.machine == "ccnot" and self.mu != 2:
            raise ConfigError("ccnot fixes mu = 2")
        if self.variant not in ps.VARIANTS:
            raise ConfigError(f"variant must be one of {ps.VARIANTS}")
        if self.basis not in ps.AXES:
            raise ConfigError(f"basis must be one of {ps.AXES}")
        if self.step <= 0 or self.t_max < self.t_min:
            raise ConfigError("time grid needs step > 0 and t_max >= t_min")
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.target is None:
            self.target = default_target(self.mu)
        try:
            self.target = check_word(self.target, self.mu)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def graph(self) -> ps.CursorGraph:
        if self.machine == "chain":
            return ps.build_linear_chain(self.mu, self.s)
        if self.machine == "subroutine":
            return ps.build_subroutine_machine(self.K, mu=self.mu)
        if self.machine == "cnot":
            return ps.build_cnot_network(self.mu, self.basis, self.variant)
        if self.machine == "ccnot":
            return ps.build_cnot_network(2, "z", self.variant)
        return ps.build_full_machine(self.mu, self.K, self.variant)

    def times(self) -> np.ndarray:
        return wd.time_grid(self.t_min, self.t_max, self.step)


_CONVERT = {
    "machine": str,
    "mu": int,
    "K": int,
    "s": int,
    "lam": float,
    "variant": str,
    "basis": str,
    "target": parse_word,
    "t_min": float,
    "t_max": float,
    "step": float,
    "outputs": lambda v: tuple(x for x in v.replace(",", " ").split() if x),
}


def read_config_file(path: str | os.PathLike) -> dict:
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERT:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        try:
            values[key] = _CONVERT[key](val)
        except ValueError as exc:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {exc}") from None
    return values


def build_config(args: argparse.Namespace, base: dict | None = None) -> ScenarioConfig:
    values = dict(base or {})
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for f in fields(ScenarioConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return ScenarioConfig(**values).validate()


# ----------------------------------------------------------------- output


def _fmt(v: float) -> str:
    v = float(v)
    if v == 0.0:
        v = 0.0  # drop the sign of -0.0
    return format(v, ".12g")


def csv_text(columns: dict[str, np.ndarray]) -> str:
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    for n, col in zip(names, data):
        if not np.all(np.isfinite(col)):
            raise ValueError(f"column {n} has non-finite values")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*data):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def output_dir(cli_value: str | None) -> Path:
    out = Path(cli_value or os.environ.get(OUTDIR_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_csv(path: Path, columns: dict[str, np.ndarray]) -> Path:
    text = csv_text(columns)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


# ---------------------------------------------------------------- figures


def _full_machine_series(mu, K, variant, target, times, lam):
    g = ps.build_full_machine(mu, K, variant)
    H = ev.assemble(g, lam, target)
    states = ev.evolve_series(H, ev.initial_state(H.basis), times)
    return g, H, states


def figure_columns(fig: int, t_max: float | None = None, step: float = 0.25, lam: float = wd.LAMBDA) -> dict:
    """Curves behind one figure, keyed by CSV column name."""
    if fig not in FIGURES:
        raise ConfigError(f"figure must be one of {FIGURES}, got {fig}")
    grid = lambda hi: wd.time_grid(0.0, hi if t_max is None else t_max, step)  # noqa: E731
    if fig == 1:
        mu = 6
        t = grid(400.0)
        z = t / 2 ** (mu / 2)
        tab = kernels.jn_table(2, z)
        return {"t": t, "pr_closed": 0.5 - 0.5 * (tab[0] - tab[2])}
    if fig == 3:
        mu, s = 6, 2 ** (6 + 1) + 1
        t = grid(250.0)
        return {"t": t, "pr_exact": wd.pr_exact_chain(t, mu, s, lam), "pr_closed": wd.pr_closed_chain(t, mu, lam)}
    if fig == 7:
        mu, K = 6, 6
        t = grid(800.0)
        return {"t": t, "pr_exact": wd.pr_exact_subroutine(t, mu, K, lam), "pr_closed": wd.pr_closed_subroutine(t, mu, lam)}
    if fig == 11:
        t = grid(30.0)
        T = ps.cnot_path_length(2)
        g = ps.build_cnot_network(2, "z")
        H = ev.assemble(g, lam)
        bits = (1, 1, 1)
        psi0 = ev.initial_state(H.basis, register=ev.z_basis_register(bits))
        states = ev.evolve_series(H, psi0, t)
        done = word_index((1, 1, -1))
        return {
            "t": t,
            "completion_exact": np.abs(wd.chain_amplitudes(t, T, lam)[:, -1]) ** 2,
            "completion_sim": ev.basis_probability(states, H.basis, done, g.n_sites),
        }
    mu, K = 3, 1
    target = default_target(mu)
    t = grid(100.0)
    variant = "projector" if fig == 17 else "raiselower"
    g, H, states = _full_machine_series(mu, K, variant, target, t, lam)
    b = H.basis
    if fig == 13:
        return {"t": t, "rho3_1": ev.counter_series(states, b, 1)}
    if fig == 14:
        return {"t": t, "cursor_q": ev.cursor_series(states, b)}
    completed = ev.completed_target_series(states, b, target)
    if fig == 15:
        p = ps.full_machine_path_length(mu, K)
        return {"t": t, "prob_completed_target": completed, "bound": np.full(t.shape, wd.completion_peak(p, lam))}
    return {"t": t, "prob_register_target": ev.register_target_series(states, b, target), "prob_completed_target": completed}


def cmd_figure(fig: int, outdir: Path, t_max=None, step=0.25) -> Path:
    return write_csv(outdir / f"fig{fig}.csv", figure_columns(fig, t_max, step))


# --------------------------------------------------------------- commands


def logical_length(cfg: ScenarioConfig, g: ps.CursorGraph) -> int:
    if cfg.machine in ("chain", "subroutine"):
        return len(ps.enumerate_successors(g, target=cfg.target))
    if cfg.machine in ("cnot", "ccnot"):
        reg = ps.x_register((1,) * (g.mu + 1)) if cfg.basis == "x" and cfg.machine == "cnot" else ps.z_register((1,) * (g.mu + 1))
        return len(ps.enumerate_successors(g, register=reg, target=cfg.target))
    return ps.full_machine_path_length(cfg.mu, cfg.K)


def cmd_compile(cfg: ScenarioConfig, out: Path, stream=None) -> ps.CursorGraph:
    stream = stream or sys.stdout
    g = cfg.graph()
    out.write_text(g.to_text())
    print(f"graph       {out}", file=stream)
    print(f"sites       {g.n_sites}", file=stream)
    print(f"edges       {g.n_edges}", file=stream)
    print(f"path length {logical_length(cfg, g)}", file=stream)
    if cfg.machine in ("subroutine", "full"):
        print(f"oracle calls {' '.join(map(str, ps.oracle_call_indices(cfg.K)))}", file=stream)
    return g


AUDIT_TIMES = (1.0, 5.0, 10.0)


def cmd_audit(g: ps.CursorGraph, lam: float, target, max_dim: int = ev.DENSE_LIMIT, stream=None) -> bool:
    stream = stream or sys.stdout
    basis = ev.SectorBasis(g.mu, g.K, g.n_sites)
    if basis.dim > max_dim:
        raise ConfigError(f"sector dimension {basis.dim} exceeds the cap {max_dim}")
    H = ev.assemble(g, lam, target if g.needs_target() else None)
    psi0 = ev.initial_state(basis)
    report = ev.audit_conservation(H, psi0)
    ov, ref = ev.reduced_overlaps(H, psi0, AUDIT_TIMES)
    dev = float(np.max(np.abs(ov - ref)))
    drift = ev.norm_drift(ev.evolve_series(H, psi0, AUDIT_TIMES))
    print(f"machine                {g.name or 'graph file'} (dim {basis.dim})", file=stream)
    print(report.format(), file=stream)
    print(f"{'reduced/full max dev':22s} {dev:.3e}", file=stream)
    print(f"{'norm drift':22s} {drift:.3e}", file=stream)
    ok = report.passed and dev < 1e-8 and drift < 1e-10
    print("AUDIT PASS" if ok else "AUDIT FAIL", file=stream)
    return ok


def cmd_peaks(mu: int, lam: float, flavor: str, stream=None, exact_cap: int = 4096) -> dict:
    stream = stream or sys.stdout
    z0 = wd.peak_root()
    t0, pr0 = wd.first_peak(mu, lam, flavor)
    out = {"z0": z0, "t0": t0, "pr0": pr0}
    print(f"z0          {z0:.12g}", file=stream)
    print(f"t0          {t0:.12g}", file=stream)
    print(f"Pr(t0)      {pr0:.12g}", file=stream)
    if flavor == "chain":
        s = 2 ** (mu + 1) + 1
        f = (lambda t: wd.pr_exact_chain(t, mu, s, lam)) if s <= exact_cap else None
    else:
        p = ps.path_length(mu)
        f = (lambda t: wd.pr_exact_subroutine(t, mu, mu, lam)) if p <= exact_cap else None
    if f is not None:
        te, pe = wd.locate_max(f, 0.5 * t0, 1.5 * t0, min(0.05, t0 / 100))
        out.update(t_exact=te, pr_exact=pe)
        print(f"exact t     {te:.12g}", file=stream)
        print(f"exact Pr    {pe:.12g}", file=stream)
    return out


SIM_OUTPUTS = ("cursor", "counter", "register_target", "completed_target", "norm")


def simulate_columns(cfg: ScenarioConfig) -> dict:
    g = cfg.graph()
    H = ev.assemble(g, cfg.lam, cfg.target if g.needs_target() else None)
    psi0 = ev.initial_state(H.basis)
    t = cfg.times()
    states = ev.evolve_series(H, psi0, t)
    b = H.basis
    wanted = cfg.outputs or SIM_OUTPUTS
    cols: dict[str, np.ndarray] = {"t": t}
    for name in wanted:
        if name == "cursor":
            cols["cursor_q"] = ev.cursor_series(states, b)
        elif name == "counter":
            for k in range(1, g.K + 1):
                cols[f"rho3_{k}"] = ev.counter_series(states, b, k)
        elif name == "register_target":
            cols["prob_register_target"] = ev.register_target_series(states, b, cfg.target)
        elif name == "completed_target":
            cols["prob_completed_target"] = ev.completed_target_series(states, b, cfg.target)
        elif name == "norm":
            cols["norm"] = np.linalg.norm(states, axis=1)
        else:
            raise ConfigError(f"unknown output {name!r}; choose from {SIM_OUTPUTS}")
    return cols


# ------------------------------------------------------------------ parser


def _scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--machine", choices=MACHINES)
    p.add_argument("--mu", type=int)
    p.add_argument("--K", "-K", dest="K", type=int)
    p.add_argument("--s", "-s", dest="s", type=int, help="chain length")
    p.add_argument("--lam", type=float, help="coupling rate (default 3*pi/8)")
    p.add_argument("--variant", choices=ps.VARIANTS)
    p.add_argument("--basis", choices=ps.AXES, help="control axis for the cnot machine")
    p.add_argument("--target", type=parse_word, help="hidden word, e.g. +-+")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--outputs", type=_CONVERT["outputs"], help=f"comma list from {SIM_OUTPUTS}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cursorwalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("figure", help="write fig<id>.csv")
    f.add_argument("id", type=int)
    f.add_argument("--outdir")
    f.add_argument("--t-max", dest="t_max", type=float)
    f.add_argument("--step", type=float, default=0.25)

    c = sub.add_parser("compile", help="export a machine's cursor graph")
    _scenario_flags(c)
    c.add_argument("--out", help="graph file (default <outdir>/<machine>.graph)")
    c.add_argument("--outdir")

    a = sub.add_parser("audit", help="conservation-law and reduced/full checks")
    _scenario_flags(a)
    a.add_argument("--graph", help="audit this graph file instead of a built-in machine")
    a.add_argument("--max-dim", dest="max_dim", type=int, default=ev.DENSE_LIMIT)

    k = sub.add_parser("peaks", help="first-peak constants")
    k.add_argument("--mu", type=int, default=6)
    k.add_argument("--lam", type=float, default=wd.LAMBDA)
    k.add_argument("--flavor", choices=("chain", "subroutine"), default="chain")

    s = sub.add_parser("simulate", help="evolve a machine and write observables")
    _scenario_flags(s)
    s.add_argument("--outdir")
    s.add_argument("--name", default="simulate.csv")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "figure":
            path = cmd_figure(args.id, output_dir(args.outdir), args.t_max, args.step)
            print(path)
            return 0
        if args.command == "compile":
            cfg = build_config(args)
            out = Path(args.out) if args.out else output_dir(args.outdir) / f"{cfg.machine}.graph"
            cmd_compile(cfg, out)
            return 0
        if args.command == "audit":
            if args.graph:
                g = ps.CursorGraph.from_text(Path(args.graph).read_text())
                target = args.target or default_target(g.mu)
                lam = args.lam or wd.LAMBDA
            else:
                cfg = build_config(args)
                g, target, lam = cfg.graph(), cfg.target, cfg.lam
            return 0 if cmd_audit(g, lam, target, args.max_dim) else 1
        if args.command == "peaks":
            cmd_peaks(args.mu, args.lam, args.flavor)
            return 0
        if args.command == "simulate":
            cfg = build_config(args)
            path = write_csv(output_dir(args.outdir) / args.name, simulate_columns(cfg))
            print(path)
            return 0
    except (ConfigError, ps.GraphError, ps.NotAComputationError, ValueError, MemoryError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
