"""Result serialization: CSV tables, run manifests and figure rendering.

The CSV files are the reproducibility contract: fixed headers, fixed
column order, every float printed with 12 significant digits and a '.'
decimal separator, independent of locale. Reruns with the same spec and
seed are byte-identical. Figures are a convenience rendering of the same
records and carry no such guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .harness import ExperimentSpec  # noqa: E402

SNR_CSV_HEADER = "snr_db,M,N,iterations,mse_em,mse_ls,trials,clamp_flags"
ITERATIONS_CSV_HEADER = "iteration,M,N,snr_db,mse_em,trials"


def format_number(x: float) -> str:
    """12 significant digits, plain ASCII, no grouping."""
    return "%.12g" % float(x)


def write_snr_csv(records: list, path) -> None:
    lines = [SNR_CSV_HEADER]
    for r in records:
        lines.append(",".join([format_number(r.snr_db), str(r.M), str(r.N),
                               str(r.iteration), format_number(r.mse_total_em),
                               format_number(r.mse_total_ls), str(r.trials),
                               str(r.flags)]))
    _write_text(path, "\n".join(lines) + "\n")


def write_iterations_csv(records: list, path) -> None:
    lines = [ITERATIONS_CSV_HEADER]
    for r in records:
        lines.append(",".join([str(r.iteration), str(r.M), str(r.N),
                               format_number(r.snr_db),
                               format_number(r.mse_total_em), str(r.trials)]))
    _write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class RunManifest:
    """Machine-readable record of one CLI run; round-trips losslessly."""

    command: str
    seed: int
    L: int
    n_values: tuple
    mod_orders: tuple
    snr_grid_db: tuple
    P1: float
    P2: float
    Pr: float
    trials: int
    em_iters: int
    version: str
    wall_time_s: float
    clamp_flags: int
    excluded_trials: int
    csv_path: str
    figure_path: str

    @classmethod
    def from_run(cls, command: str, spec: ExperimentSpec, version: str,
                 wall_time_s: float, records: list, csv_path,
                 figure_path) -> "RunManifest":
        return cls(command=command, seed=spec.seed, L=spec.L,
                   n_values=tuple(spec.n_values), mod_orders=tuple(spec.mod_orders),
                   snr_grid_db=tuple(float(s) for s in spec.snr_grid_db),
                   P1=spec.P1, P2=spec.P2, Pr=spec.Pr, trials=spec.trials,
                   em_iters=spec.em_iters, version=version,
                   wall_time_s=wall_time_s,
                   clamp_flags=sum(r.flags for r in records),
                   excluded_trials=sum(r.excluded for r in records),
                   csv_path=str(csv_path),
                   figure_path="" if figure_path is None else str(figure_path))


# Floats use repr (shortest round-trip form); everything else is exact as text.
_INT_FIELDS = {"seed", "L", "trials", "em_iters", "clamp_flags", "excluded_trials"}
_FLOAT_FIELDS = {"P1", "P2", "Pr", "wall_time_s"}
_INT_TUPLE_FIELDS = {"n_values", "mod_orders"}
_FLOAT_TUPLE_FIELDS = {"snr_grid_db"}


def write_manifest(manifest: RunManifest, path) -> None:
    lines = []
    for f in fields(RunManifest):
        value = getattr(manifest, f.name)
        if f.name in _INT_TUPLE_FIELDS or f.name in _FLOAT_TUPLE_FIELDS:
            text = ",".join(repr(v) for v in value)
        elif f.name in _FLOAT_FIELDS:
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    _write_text(path, "\n".join(lines) + "\n")


def read_manifest(path) -> RunManifest:
    raw = {}
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition(" = ")
        raw[key] = value
    kwargs = {}
    for f in fields(RunManifest):
        value = raw[f.name]
        if f.name in _INT_FIELDS:
            kwargs[f.name] = int(value)
        elif f.name in _FLOAT_FIELDS:
            kwargs[f.name] = float(value)
        elif f.name in _INT_TUPLE_FIELDS:
            kwargs[f.name] = tuple(int(v) for v in value.split(",")) if value else ()
        elif f.name in _FLOAT_TUPLE_FIELDS:
            kwargs[f.name] = tuple(float(v) for v in value.split(",")) if value else ()
        else:
            kwargs[f.name] = value
    return RunManifest(**kwargs)


def manifest_path_for(csv_path) -> Path:
    return Path(csv_path).with_suffix("").with_name(
        Path(csv_path).with_suffix("").name + ".manifest.txt")


def figure_path_for(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


_MARKERS = {4: "o", 16: "s", 64: "^"}


def render_snr_figure(records: list, path) -> None:
    """Total MSE versus SNR, EM solid and LS dashed, one color per (M, N)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for key in sorted({(r.M, r.N) for r in records}):
        M, N = key
        rows = sorted((r for r in records if (r.M, r.N) == key),
                      key=lambda r: r.snr_db)
        snrs = [r.snr_db for r in rows]
        marker = _MARKERS.get(M, "x")
        line, = ax.semilogy(snrs, [r.mse_total_em for r in rows], marker=marker,
                            label=f"EM, {M}-QAM" + (f", N={N}" if N else ""))
        ax.semilogy(snrs, [r.mse_total_ls for r in rows], marker=marker,
                    linestyle="--", color=line.get_color(), alpha=0.6,
                    label=f"LS, {M}-QAM")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("total MSE")
    ax.grid(True, which="both", alpha=0.3, linestyle="--")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_iterations_figure(records: list, path) -> None:
    """Total MSE versus EM iteration count, one curve per (M, N)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for key in sorted({(r.M, r.N, r.snr_db) for r in records}):
        M, N, snr = key
        rows = sorted((r for r in records if (r.M, r.N, r.snr_db) == key),
                      key=lambda r: r.iteration)
        ax.semilogy([r.iteration for r in rows],
                    [r.mse_total_em for r in rows],
                    marker=_MARKERS.get(M, "x"),
                    label=f"{M}-QAM, N={N}, {format_number(snr)} dB")
    ax.set_xlabel("EM iteration")
    ax.set_ylabel("total MSE")
    ax.grid(True, which="both", alpha=0.3, linestyle="--")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="ascii", newline="") as handle:
        handle.write(text)
