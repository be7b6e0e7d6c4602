"""Report emission: delimited tables, JSON metadata sidecars, and static
figures rendered next to them.

Every table can be written as CSV or JSON (``fmt``).  Figures are SVG by
default, produced with the Agg backend so report generation works
headless.
"""

from __future__ import annotations

import csv
import datetime
import io as _io
import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import scipy

from .harness import ConvergenceReport, Example013Report, RatioReport


def _version_block() -> dict:
    from . import __version__

    return {
        "specnet": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }


def _table_text(header: Sequence[str], rows: Iterable[Sequence], fmt: str) -> str:
    rows = [list(r) for r in rows]
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([dict(zip(header, row)) for row in rows], indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r} (want csv or json)")


def sweep_table(report: ConvergenceReport, fmt: str = "csv") -> str:
    """Per-m table: eigenvalues, macro eigenvalues, ratios, rescaled
    columns, parasitic product, and the eigenvector profiles."""
    N = report.target.N
    n = report.target.n
    header = ["m", "node_count"]
    header += [f"nu_{k}" for k in range(N + 1)]
    header += [f"lam_macro_{k}" for k in range(N)]
    header += [f"ratio_{k}" for k in range(1, N)]
    header += [f"m4_nu_{k}" for k in range(N + 1)]
    header += ["m2_nu_parasitic"]
    header += [f"corridor_mass_{k}" for k in range(n + 1)]
    header += [f"cluster_flatness_{k}" for k in range(n + 1)]
    header += ["min_cluster_gap", "error"]
    rows = []
    for r in report.rows:
        if r.ok:
            row = [r.m, r.node_count]
            row += list(r.nu)
            row += list(r.lam_macro)
            row += list(r.ratios)
            row += list(r.rescaled)
            row += [r.parasitic]
            row += list(r.corridor_mass)
            row += list(r.cluster_flatness)
            row += [r.min_cluster_gap, ""]
        else:
            row = [r.m, r.node_count] + [""] * (len(header) - 3) + [r.error]
        rows.append(row)
    return _table_text(header, rows, fmt)


def sweep_metadata(report: ConvergenceReport, extra: Optional[dict] = None) -> dict:
    """JSON sidecar: seeds, versions, thresholds, verdicts, and the data
    needed to rebuild the ratio report."""
    meta = {
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "versions": _version_block(),
        "seed": report.seed,
        "target": {
            "targets": list(report.target.targets),
            "N": report.target.N,
            "epsilon": report.target.epsilon,
        },
        "V_F": report.V_F,
        "mu": [float(x) for x in report.mu],
        "weights": [[u, v, w] for (u, v), w in sorted(report.weights.weights.items())],
        "weight_mismatch": report.weights.mismatch,
        "thresholds": report.thresholds,
        "verdicts": report.verdicts,
        "fits": report.fits,
        "rows": [
            {
                "m": r.m,
                "node_count": r.node_count,
                "nu": list(map(float, r.nu)) if r.ok else None,
                "lam_macro": list(map(float, r.lam_macro)) if r.ok else None,
                "rescaled": list(map(float, r.rescaled)) if r.ok else None,
                "parasitic": r.parasitic,
                "error": r.error,
            }
            for r in report.rows
        ],
    }
    if extra:
        meta.update(extra)
    return meta


def ratio_table(report: RatioReport, fmt: str = "csv") -> str:
    if not report.rows:
        return _table_text(["m"], [], fmt)
    n = report.rows[0].ratios.size
    header = ["m"]
    header += [f"ratio_{k}" for k in range(1, n + 1)]
    header += [f"target_ratio_{k}" for k in range(1, n + 1)]
    header += ["delta", "ratio_error", "claimed_bound", "qualifies", "bound_holds"]
    rows = []
    for r in report.rows:
        rows.append(
            [r.m]
            + list(r.ratios)
            + list(r.targets)
            + [r.delta, r.ratio_error, r.claimed_bound, r.qualifies, r.bound_holds]
        )
    return _table_text(header, rows, fmt)


def example013_table(report: Example013Report, fmt: str = "csv") -> str:
    header = ["check", "value", "expected", "tolerance", "passed"]
    rows = [[c.name, c.value, c.expected, c.tolerance, c.passed] for c in report.checks]
    return _table_text(header, rows, fmt)


def surface_schedule_table(
    rows: Sequence[tuple], n_eigs: int, fmt: str = "csv"
) -> str:
    """Rows are (delta, eigenvalues, rescaled, kappa) tuples."""
    header = ["delta"]
    header += [f"lam_{k}" for k in range(n_eigs)]
    header += [f"rescaled_{k}" for k in range(n_eigs)]
    header += ["kappa"]
    out = []
    for delta, vals, rescaled, kappa in rows:
        out.append([delta] + list(vals) + list(rescaled) + [kappa])
    return _table_text(header, out, fmt)


def cluster_gap_table(rows: Sequence[dict], fmt: str = "csv") -> str:
    header = [
        "size",
        "D",
        "seed",
        "lambda2_adjacency",
        "threshold",
        "cheeger_lower",
        "post_deletion_cheeger_lower",
        "resamples",
        "permutation_draws",
    ]
    return _table_text(header, [[r[h] for h in header] for r in rows], fmt)


# -- figures ---------------------------------------------------------------


def render_sweep_figures(
    report: ConvergenceReport, outdir, image_format: str = "svg"
) -> List[Path]:
    """Convergence figures next to the tables: reduction error, rescaled
    eigenvalues against their targets, and the parasitic products."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = [r for r in report.rows if r.ok]
    if not rows:
        return []
    N = report.target.N
    n = report.target.n
    ms = np.array([r.m for r in rows])
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k in range(1, N):
        err = np.array([abs(r.ratios[k - 1] - 1.0) for r in rows])
        ax.loglog(ms, err, "o-", label=f"k={k}")
    ax.axhline(report.thresholds.get("reduction_guard", 0.2), color="gray", ls="--", lw=1)
    ax.set_xlabel("m")
    ax.set_ylabel("|nu_k / lam_k(L_m) - 1|")
    ax.set_title("Reduction error vs scale")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = outdir / f"reduction_error.{image_format}"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k in range(1, N):
        vals = np.array([r.rescaled[k] for r in rows])
        ax.semilogx(ms, vals, "o-", label=f"m^4 nu_{k}")
    for k, mu_k in enumerate(report.mu, start=1):
        style = "-" if k <= n else ":"
        ax.axhline(mu_k / report.V_F, color="gray", ls=style, lw=0.8)
    ax.set_xlabel("m")
    ax.set_ylabel("m^4 nu_k")
    ax.set_title("Rescaled spectrum vs targets")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = outdir / f"rescaled_spectrum.{image_format}"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(ms, [r.parasitic for r in rows], "o-", label="m^2 nu_N")
    ax.loglog(ms, [r.m**2 * r.parasitic for r in rows], "s-", label="m^4 nu_N")
    ax.set_xlabel("m")
    ax.set_ylabel("parasitic products")
    ax.set_title("Parasitic eigenvalue floor")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = outdir / f"parasitic.{image_format}"
    fig.savefig(p)
    plt.close(fig)
    paths.append(p)
    return paths


def render_surface_figure(rows, outdir, image_format: str = "svg") -> Path:
    """Pinch-family spectra: raw eigenvalues shrink linearly with delta,
    rescaled ones sit on the targets."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    deltas = np.array([r[0] for r in rows])
    raw = np.array([r[1] for r in rows])
    rescaled = np.array([r[2] for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for k in range(1, raw.shape[1]):
        ax1.loglog(deltas, raw[:, k], "o-", label=f"lam_{k}")
        ax2.semilogx(deltas, rescaled[:, k], "o-", label=f"lam_{k}/delta")
    ax1.set_xlabel("delta")
    ax1.set_ylabel("eigenvalue")
    ax1.set_title("Pinched spectra")
    ax1.legend(fontsize=8)
    ax2.set_xlabel("delta")
    ax2.set_ylabel("rescaled eigenvalue")
    ax2.set_title("After metric rescaling")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    p = Path(outdir) / f"surface_spectra.{image_format}"
    fig.savefig(p)
    plt.close(fig)
    return p


def render_example013_figure(report: Example013Report, outdir, image_format: str = "svg") -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    deltas = np.array([s[0] for s in report.spectra])
    rescaled = np.array([s[2] for s in report.spectra])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k, target in enumerate((0.0, 1.0, 3.0)):
        ax.semilogx(deltas, rescaled[:, k], "o-", label=f"lam_{k}")
        ax.axhline(target, color="gray", ls=":", lw=0.8)
    ax.set_xlabel("delta")
    ax.set_ylabel("rescaled eigenvalue")
    ax.set_title("Worked example: rescaled spectra vs {0, 1, 3}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = outdir / f"example013.{image_format}"
    fig.savefig(p)
    plt.close(fig)
    return p
