r"""Parameter sweep over (alpha, beta, h) and result serialization.

The stability study runs one simulation per grid cell and reduces each
to four numbers: the balance indicator Var, the time actually reached,
the accepted step count, and why the run stopped.  Cells are
independent, executed in a deterministic order (optionally across
worker processes), and a failed cell is recorded rather than allowed to
abort the sweep.

Serialization lives here too: sweep tables as CSV (full-precision,
round-trippable) or as an aligned text matrix with one block per alpha,
plus the per-run ledger and snapshot CSV writers used by the command
line front end.  All file writes go through a write-to-temp,
rename-on-success path so no output file is ever left half written.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fem1d
from .diagnostics import PowerLedger
from .integrator import RunConfig, RunResult, run_simulation
from .phsystem import State

CSV_HEADER = ("alpha", "beta", "h", "var", "t_final", "n_steps", "termination")
LEDGER_HEADER = PowerLedger.COLUMNS  # t,dt,newton_iters,H,E,qH,qE,QH,QE,bal
SNAPSHOT_HEADER = ("x", "v", "e", "e_r")


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian study grid; defaults match the full stability study."""

    alphas: tuple = (0.5, 1.0, 2.0)
    betas: tuple = (0.0, 1.0, 2.0, 5.0)
    hs: tuple = (5e-4, 1e-3, 2.5e-3, 5e-3, 1e-2)
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(a <= 0 for a in self.alphas):
            raise ValueError("alphas must be positive")
        if any(b < 0 for b in self.betas):
            raise ValueError("betas must be nonnegative")
        if any(h <= 0 for h in self.hs):
            raise ValueError("element widths must be positive")

    def cells(self) -> list[tuple[float, float, float]]:
        return [(a, b, h) for a in self.alphas for b in self.betas for h in self.hs]


@dataclass(frozen=True)
class SweepCell:
    """One grid point's reduced outcome."""

    alpha: float
    beta: float
    h: float
    var: float
    t_final: float
    n_steps: int
    termination: str


@dataclass(frozen=True)
class SweepResult:
    cells: tuple

    def cell(self, alpha: float, beta: float, h: float) -> SweepCell:
        for c in self.cells:
            if (c.alpha, c.beta, c.h) == (alpha, beta, h):
                return c
        raise KeyError(f"no cell for alpha={alpha}, beta={beta}, h={h}")


def cell_tag(alpha: float, beta: float, h: float) -> str:
    """Unique, filesystem-safe name for one grid cell."""
    return f"a{alpha:g}_b{beta:g}_h{h:g}"


def _run_cell(payload) -> SweepCell:
    alpha, beta, h, overrides, out_dir = payload
    try:
        config = RunConfig(h=h, alpha=alpha, beta=beta, **overrides)
        result = run_simulation(config)
    except Exception as exc:  # a bad cell must not poison the sweep
        return SweepCell(alpha, beta, h, float("nan"), float("nan"), 0,
                         f"error: {type(exc).__name__}: {exc}")
    if out_dir is not None:
        path = Path(out_dir) / f"ledger_{cell_tag(alpha, beta, h)}.csv"
        atomic_write_text(path, format_ledger_csv(result.ledger))
    return SweepCell(alpha, beta, h, result.var, result.t_reached,
                     result.n_steps, result.termination_reason)


def run_sweep(grid: SweepGrid, workers: int | None = None,
              out_dir: str | os.PathLike | None = None) -> SweepResult:
    """Execute every cell of ``grid``; never raises for a failing cell.

    ``workers`` > 1 distributes cells over processes; 1 (or a 1-cell
    grid) runs inline.  When ``out_dir`` is given, each cell writes its
    ledger CSV there under a unique name.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    payloads = [(a, b, h, dict(grid.overrides), os.fspath(out_dir) if out_dir else None)
                for (a, b, h) in grid.cells()]
    if workers <= 1 or len(payloads) <= 1:
        cells = [_run_cell(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, payloads))
    return SweepResult(cells=tuple(cells))


def format_table_csv(result: SweepResult) -> str:
    """Full-precision CSV, one row per cell."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for c in result.cells:
        writer.writerow([repr(c.alpha), repr(c.beta), repr(c.h), repr(c.var),
                         repr(c.t_final), c.n_steps, c.termination])
    return buf.getvalue()


def parse_table_csv(text: str) -> SweepResult:
    """Inverse of :func:`format_table_csv` (exact round trip)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"unexpected sweep CSV header: {rows[0] if rows else 'empty'}")
    cells = [SweepCell(float(r[0]), float(r[1]), float(r[2]), float(r[3]),
                       float(r[4]), int(r[5]), r[6]) for r in rows[1:]]
    return SweepResult(cells=tuple(cells))


def format_table_text(result: SweepResult) -> str:
    """Aligned matrix per alpha: one row per beta, one column per h."""
    alphas, betas, hs = [], [], []
    for c in result.cells:
        if c.alpha not in alphas:
            alphas.append(c.alpha)
        if c.beta not in betas:
            betas.append(c.beta)
        if c.h not in hs:
            hs.append(c.h)
    by_key = {(c.alpha, c.beta, c.h): c for c in result.cells}
    lines = []
    for a in alphas:
        lines.append(f"alpha = {a:g}  (cell: var / t_final (n_steps))")
        header = ["beta \\ h"] + [f"{h:g}" for h in hs]
        table = [header]
        for b in betas:
            row = [f"{b:g}"]
            for h in hs:
                c = by_key.get((a, b, h))
                if c is None:
                    row.append("-")
                elif c.termination.startswith("error"):
                    row.append(c.termination)
                else:
                    row.append(f"{c.var:.3e} / {c.t_final:.3f} ({c.n_steps})")
            table.append(row)
        widths = [max(len(r[j]) for r in table) for j in range(len(header))]
        for r in table:
            lines.append("  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip())
        lines.append("")
    return "\n".join(lines)


def emit_table(result: SweepResult, format: str = "csv") -> str:
    """Serialize a sweep result; ``format`` is "csv" or "text"."""
    if format == "csv":
        return format_table_csv(result)
    if format == "text":
        return format_table_text(result)
    raise ValueError(f"unknown table format: {format!r}")


def format_ledger_csv(ledger: PowerLedger) -> str:
    """Per-step power bookkeeping as full-precision CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LEDGER_HEADER)
    for row in ledger.rows():
        writer.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def format_snapshot_csv(mesh: fem1d.Mesh1D, state: State) -> str:
    """Nodal snapshot (x, v, e, e_r) of one state as CSV."""
    v = fem1d.as_full_vector(mesh, state.v)
    e = fem1d.as_full_vector(mesh, state.e)
    if state.e_r.size:
        e_r = fem1d.as_full_vector(mesh, state.e_r)
    else:
        e_r = np.zeros(mesh.n_nodes)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SNAPSHOT_HEADER)
    for k in range(mesh.n_nodes):
        # plain-float repr: numpy scalars stringify as np.float64(...)
        writer.writerow([repr(float(mesh.nodes[k])), repr(float(v[k])),
                         repr(float(e[k])), repr(float(e_r[k]))])
    return buf.getvalue()


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see a
    partial file and failures leave the old content intact."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_run_outputs(result: RunResult, out_dir: str | os.PathLike) -> list[Path]:
    """Write ledger + snapshot CSVs for one run; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mesh = fem1d.build_mesh(result.config.mesh_elems)
    paths = []
    ledger_path = out / "ledger.csv"
    atomic_write_text(ledger_path, format_ledger_csv(result.ledger))
    paths.append(ledger_path)
    digits = max(len(str(len(result.snapshots) - 1)), 2)
    for k, snap in enumerate(result.snapshots):
        p = out / f"snapshot_{k:0{digits}d}_t{snap.t:.6f}.csv"
        atomic_write_text(p, format_snapshot_csv(mesh, snap))
        paths.append(p)
    return paths
