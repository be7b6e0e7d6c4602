"""Command-line interface.

Subcommands: prescribe, assemble, spectrum, sweep, surface, cluster-gap,
example-013, ratios.  Global flags: --seed, --config, --out, --format.
Reports land in the output directory as CSV (or JSON) tables with a JSON
metadata sidecar and SVG figures alongside.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from .config import RunConfig
from .expander import cheeger_bounds, expose_ports, sample_wiring
from .graph import spectrum_dense, spectrum_smallest_k
from .harness import (
    ConvergenceReport,
    SweepRow,
    example_013,
    ratio_report,
    sweep_convergence,
)
from .homogenize import assemble_network, default_block, diamond_block
from .prescribe import SpectralTarget, pad_targets, prescribe_complete_graph
from .report import (
    cluster_gap_table,
    example013_table,
    ratio_table,
    render_example013_figure,
    render_surface_figure,
    render_sweep_figures,
    surface_schedule_table,
    sweep_metadata,
    sweep_table,
)
from .surface import pinch_model, rescaled_spectrum
from .topology import SurfaceModel, walecki_decomposition


def _load_target(path) -> SpectralTarget:
    return sio.target_from_json_obj(sio.read_json(path))


def _load_graph(path):
    path = Path(path)
    if path.suffix == ".json":
        return sio.graph_from_json_obj(sio.read_json(path))
    return sio.graph_from_text(sio.read_text(path))


def _block_by_name(name: str, V_F: float, D: int):
    if name == "default":
        return default_block(D=D, V_F=V_F)
    if name == "diamond":
        if D != 2:
            raise SystemExit("the diamond block supports D = 2 only")
        return diamond_block(V_F=V_F)
    raise SystemExit(f"unknown block {name!r} (want default or diamond)")


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def cmd_prescribe(args, cfg: RunConfig, outdir: Path) -> int:
    t = _load_target(args.target)
    mu = pad_targets(t, cfg.V_F)
    ws = prescribe_complete_graph(
        t.N,
        args.vertex_measure,
        mu,
        tol=cfg.prescribe_tol,
        seed=cfg.seed,
        restarts=cfg.prescribe_restarts,
        iterations=cfg.prescribe_iterations,
        max_weight=args.max_weight,
    )
    out = outdir / "solution.json"
    sio.write_json(out, sio.solution_to_json_obj(ws))
    print(f"prescribed K_{t.N} for mu = {[float(x) for x in np.round(mu, 6)]}")
    print(f"mismatch {ws.mismatch:.3e} after {ws.restarts_used} start(s)")
    print(f"wrote {out}")
    return 0


def cmd_assemble(args, cfg: RunConfig, outdir: Path) -> int:
    t = _load_target(args.target)
    ws = sio.solution_from_json_obj(sio.read_json(args.solution))
    ca = walecki_decomposition(t.N, orientation_seed=cfg.seed)
    block = _block_by_name(args.block, cfg.V_F, ca.D)
    net = assemble_network(t, ws, block, ca, m=args.m, seed=cfg.seed)
    gpath = outdir / "network.txt"
    bpath = outdir / "network_bookkeeping.json"
    sio.write_text(gpath, sio.graph_to_text(net.graph))
    sio.write_json(bpath, sio.network_bookkeeping_json_obj(net))
    total_corridor = sum(net.corridor_lengths.values())
    print(
        f"assembled m={args.m}: {net.graph.vertex_count} nodes "
        f"({t.N} clusters x {args.m ** 3} blocks + {total_corridor} corridor blocks)"
    )
    print(f"wrote {gpath} and {bpath}")
    return 0


def cmd_spectrum(args, cfg: RunConfig, outdir: Path) -> int:
    g = _load_graph(args.graph)
    if args.dense or g.vertex_count <= args.k + 1:
        eig = spectrum_dense(g, dense_threshold=cfg.dense_threshold)
        vals = eig.eigenvalues[: args.k]
        res = eig.residuals[: args.k]
    else:
        eig = spectrum_smallest_k(g, k=args.k, tol=cfg.eig_tol, seed=cfg.seed)
        vals = eig.eigenvalues
        res = eig.residuals
    header = ["k", "eigenvalue", "residual"]
    rows = [[k, float(v), float(r)] for k, (v, r) in enumerate(zip(vals, res))]
    from .report import _table_text

    out = outdir / f"spectrum.{args.format}"
    sio.write_text(out, _table_text(header, rows, args.format))
    for k, v in enumerate(vals):
        print(f"lam_{k} = {v:.12g}")
    print(f"wrote {out}")
    return 0


def cmd_sweep(args, cfg: RunConfig, outdir: Path) -> int:
    t = _load_target(args.target)
    block = _block_by_name(args.block, cfg.V_F, (t.N - 1) // 2)
    m_list = _parse_ints(args.m_list) if args.m_list else list(cfg.m_list)
    report = sweep_convergence(
        t,
        block,
        m_list,
        seed=cfg.seed,
        prescribe_tol=cfg.prescribe_tol,
        eig_tol=cfg.eig_tol,
    )
    table_path = outdir / f"sweep.{args.format}"
    sio.write_text(table_path, sweep_table(report, args.format))
    meta_path = outdir / "sweep_meta.json"
    sio.write_json(meta_path, sweep_metadata(report, extra={"config": cfg.as_dict()}))
    ratios = ratio_report(t, report)
    ratio_path = outdir / f"ratios.{args.format}"
    sio.write_text(ratio_path, ratio_table(ratios, args.format))
    figures = render_sweep_figures(report, outdir)
    for name, ok in report.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    print(f"wrote {table_path}, {meta_path}, {ratio_path}")
    for f in figures:
        print(f"wrote {f}")
    return 0 if all(report.verdicts.values()) else 2


def cmd_surface(args, cfg: RunConfig, outdir: Path) -> int:
    obj = sio.read_json(args.model)
    model = SurfaceModel(
        dual_graph=sio.graph_from_json_obj(obj["dual_graph"]),
        vertex_genera=tuple(obj["vertex_genera"]),
    )
    deltas = _parse_floats(args.deltas) if args.deltas else list(cfg.delta_schedule)
    rows = []
    for delta in deltas:
        eig = spectrum_dense(pinch_model(model, delta), dense_threshold=cfg.dense_threshold)
        res = rescaled_spectrum(eig, delta)
        rows.append((delta, eig.eigenvalues, res.eigenvalues, res.kappa))
    out = outdir / f"surface.{args.format}"
    n_eigs = model.dual_graph.vertex_count
    sio.write_text(out, surface_schedule_table(rows, n_eigs, args.format))
    fig = render_surface_figure(rows, outdir)
    for delta, vals, rescaled, kappa in rows:
        print(
            f"delta={delta:g}: lam={np.round(vals, 8).tolist()} "
            f"rescaled={np.round(rescaled, 8).tolist()} kappa={kappa:g}"
        )
    print(f"wrote {out} and {fig}")
    return 0


def cmd_cluster_gap(args, cfg: RunConfig, outdir: Path) -> int:
    threshold = 2.0 * math.sqrt(2 * args.D - 1) + cfg.gap_slack
    rows = []
    for i in range(args.samples):
        seed = cfg.seed + i
        wiring = sample_wiring(
            args.size,
            args.D,
            seed,
            gap_threshold=threshold,
            resample_budget=cfg.resample_budget,
        )
        ported = expose_ports(wiring, seed)
        post_lower, _ = cheeger_bounds(ported.graph(skip_ports=True))
        cert = wiring.gap_certificate
        rows.append(
            {
                "size": args.size,
                "D": args.D,
                "seed": seed,
                "lambda2_adjacency": cert.lambda2_adjacency,
                "threshold": cert.threshold,
                "cheeger_lower": cert.cheeger_lower,
                "post_deletion_cheeger_lower": post_lower,
                "resamples": cert.resamples,
                "permutation_draws": cert.permutation_draws,
            }
        )
        print(
            f"size={args.size} D={args.D} seed={seed}: lambda2={cert.lambda2_adjacency:.4f} "
            f"(threshold {cert.threshold:.4f}), post-deletion Cheeger >= {post_lower:.4f}"
        )
    out = outdir / f"cluster_gap.{args.format}"
    sio.write_text(out, cluster_gap_table(rows, args.format))
    print(f"wrote {out}")
    return 0


def cmd_example_013(args, cfg: RunConfig, outdir: Path) -> int:
    report = example_013(cfg.delta_schedule)
    out = outdir / f"example013.{args.format}"
    sio.write_text(out, example013_table(report, args.format))
    fig = render_example013_figure(report, outdir)
    for c in report.checks:
        print(
            f"{'PASS' if c.passed else 'FAIL'} {c.name}: "
            f"{c.value:.12g} vs {c.expected:.12g} (tol {c.tolerance:g})"
        )
    print(f"wrote {out} and {fig}")
    return 0 if report.passed else 2


def cmd_ratios(args, cfg: RunConfig, outdir: Path) -> int:
    meta = sio.read_json(args.sweep_meta)
    t = SpectralTarget(
        targets=tuple(meta["target"]["targets"]),
        N=int(meta["target"]["N"]),
        epsilon=float(meta["target"]["epsilon"]),
    )
    rows = []
    for r in meta["rows"]:
        row = SweepRow(m=int(r["m"]), node_count=int(r["node_count"]))
        if r.get("error"):
            row.error = r["error"]
        else:
            row.nu = np.asarray(r["nu"])
            row.rescaled = np.asarray(r["rescaled"])
            row.parasitic = float(r["parasitic"])
        rows.append(row)
    report = ConvergenceReport(
        target=t,
        V_F=float(meta["V_F"]),
        mu=np.asarray(meta["mu"]),
        weights=None,
        seed=int(meta["seed"]),
        rows=rows,
    )
    ratios = ratio_report(t, report)
    out = outdir / f"ratios.{args.format}"
    sio.write_text(out, ratio_table(ratios, args.format))
    for r in ratios.rows:
        print(
            f"m={r.m}: ratios={np.round(r.ratios, 6).tolist()} "
            f"delta={r.delta:.4g} bound_holds={r.bound_holds}"
        )
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specnet",
        description="Spectral prescription and heavy-vertex network experiments",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument("--out", type=str, default=".", help="output directory")
    parser.add_argument(
        "--format", choices=("csv", "json"), default="csv", help="table format"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prescribe", help="solve for K_N weights matching a target file")
    p.add_argument("--target", required=True, help="SpectralTarget JSON file")
    p.add_argument("--vertex-measure", type=float, default=1.0)
    p.add_argument("--max-weight", type=float, default=None)
    p.set_defaults(func=cmd_prescribe)

    p = sub.add_parser("assemble", help="build the heavy-vertex network at one scale")
    p.add_argument("--target", required=True)
    p.add_argument("--solution", required=True, help="WeightSolution JSON file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--block", default="default", help="default or diamond")
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("spectrum", help="eigenvalues of a serialized graph")
    p.add_argument("--graph", required=True, help="graph .txt or .json file")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--dense", action="store_true", help="force the dense solver")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="full convergence experiment over scales")
    p.add_argument("--target", required=True)
    p.add_argument("--m-list", default=None, help="comma-separated scales")
    p.add_argument("--block", default="default")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("surface", help="pinch-family spectra of a surface model")
    p.add_argument("--model", required=True, help="SurfaceModel JSON file")
    p.add_argument("--deltas", default=None, help="comma-separated pinch scales")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("cluster-gap", help="sample wirings and emit gap certificates")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--D", type=int, default=2)
    p.add_argument("--samples", type=int, default=1)
    p.set_defaults(func=cmd_cluster_gap)

    p = sub.add_parser("example-013", help="run the {0,1,3} worked example")
    p.set_defaults(func=cmd_example_013)

    p = sub.add_parser("ratios", help="ratio report from a stored sweep")
    p.add_argument("--sweep-meta", required=True, help="sweep_meta.json from a sweep run")
    p.set_defaults(func=cmd_ratios)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    return args.func(args, cfg, outdir)


if __name__ == "__main__":
    sys.exit(main())
