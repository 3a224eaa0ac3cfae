"""Command-line interface: ``steklov-lab``.

Exit status is 0 when every record passes, 1 when a check fails and 2 on
usage errors or malformed input files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from ..density import BoundaryDensity, DensityError, uniform_density
from ..files import read_density, read_mesh, write_density, write_mesh
from ..mesh import (MeshError, arc_pair, build_cylinder, build_disk, glue_segments, mesh_size,
                    puncture, refine, topology, validate)
from ..optimize import OptimizerConfig, candidate_immersion, maximize_density
from ..spectral import GAP_TOL, SpectrumError, cluster_size, steklov_spectrum
from .records import ExperimentRecord, records_to_csv, records_to_json
from .studies import (catenoid_check, ceiling_study, convergence_study, critical_half_height,
                      gluing_study, study_passed, weinstock_check)
from .svg import line_chart

__all__ = ["main", "build_parser"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args, need_mesh=True):
    mesh = None
    if args.mesh:
        mesh = read_mesh(args.mesh)
    elif need_mesh:
        raise UsageError("--mesh is required")
    if mesh is not None and getattr(args, "refine", 0):
        mesh = refine(mesh, args.refine)
    rho = None
    if mesh is not None:
        if getattr(args, "density", None):
            if getattr(args, "refine", 0):
                raise UsageError("--density cannot be combined with --refine")
            rho = read_density(args.density, mesh)
        else:
            rho = uniform_density(mesh)
    return mesh, rho


def _half_density(mesh, low=0.1):
    """1 on the first half of every loop, ``low`` on the rest."""
    vals = np.ones(len(mesh.boundary_edges))
    off = mesh.loop_offsets
    for i in range(len(off) - 1):
        n = off[i + 1] - off[i]
        vals[off[i] + n // 2:off[i + 1]] = low
    return BoundaryDensity(vals)


# subcommands ------------------------------------------------------------

def cmd_mesh(args):
    if args.action == "build":
        if args.shape == "disk":
            mesh = build_disk(args.rings, args.sectors, args.radius, levels=args.refine or 0)
        else:
            T = critical_half_height() if args.half_height is None else args.half_height
            mesh = build_cylinder(T, args.axial, args.circ, levels=args.refine or 0)
    else:
        mesh, _ = _load(args)
        if args.action == "puncture":
            if args.vertex is None:
                raise UsageError("mesh puncture needs --vertex")
            mesh = puncture(mesh, args.vertex)
        elif args.action == "glue":
            if args.edges is None:
                raise UsageError("mesh glue needs --edges")
            l1, l2 = args.loops
            c1, c2 = args.centers
            mesh = glue_segments(mesh, arc_pair(mesh, l1, l2, args.edges, c1, c2))
        elif args.action == "validate":
            validate(mesh)
    topo = topology(mesh)
    info = {"vertices": mesh.n_vertices, "triangles": mesh.n_triangles,
            "boundary_components": topo.boundary_count, "genus": topo.genus,
            "euler": topo.euler, "h": mesh_size(mesh)}
    if args.action != "validate":
        if args.out:
            write_mesh(mesh, args.out)
        else:
            from ..files import dumps_mesh
            sys.stdout.write(dumps_mesh(mesh))
            return 0
    print(json.dumps(info), file=sys.stderr if args.action != "validate" else sys.stdout)
    return 0


def cmd_spectrum(args):
    mesh, rho = _load(args)
    spec = steklov_spectrum(mesh, rho, count=args.count)
    mult = cluster_size(spec.eigenvalues, args.gap_tol)
    if (args.format or "json") == "json":
        data = {"sigma": spec.eigenvalues.tolist(), "sigma_bar": spec.normalized.tolist(),
                "length": spec.length, "multiplicity": mult,
                "residuals": spec.residuals.tolist(), "vertices": mesh.n_vertices}
        _emit(json.dumps(data, indent=2) + "\n", args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "sigma", "sigma_bar", "residual"])
        for k, (s, sb, r) in enumerate(zip(spec.eigenvalues, spec.normalized, spec.residuals)):
            w.writerow([k, repr(float(s)), repr(float(sb)), repr(float(r))])
        _emit(buf.getvalue(), args.out)
    return 0


def cmd_optimize(args):
    if args.mesh:
        mesh, rho0 = _load(args)
    else:
        mesh = build_disk(2, 8, levels=args.refine or 0)
        rho0 = uniform_density(mesh)
    if args.seed is not None and not args.density:
        rng = np.random.default_rng(args.seed)
        rho0 = BoundaryDensity(rng.uniform(0.2, 1.8, len(mesh.boundary_edges)))
    floor = args.floor_fraction / mesh.boundary_edge_lengths.sum()
    cfg = OptimizerConfig(max_iters=args.max_iters, floor=floor, gap_tol=args.gap_tol)
    trace = maximize_density(mesh, rho0, cfg)
    imm = candidate_immersion(mesh, trace.density, gap_tol=args.gap_tol)
    records = [ExperimentRecord("optimize", {"index": i, "iteration": i},
                                {"sigma_bar": r.sigma_bar, "grad_norm": r.grad_norm, "step": r.step,
                                 "multiplicity": r.multiplicity},
                                tolerance=cfg.tol_grad, passed=True)
               for i, r in enumerate(trace.records)]
    summary = {"status": trace.status, "sigma_bar": float(trace.sigma_bar[-1]),
               "multiplicity": trace.multiplicity, "iterations": len(trace.records),
               "immersion_dimension": imm.dimension, "immersion_deviation": imm.deviation}
    print(json.dumps(summary), file=sys.stderr)
    if args.density_out:
        write_density(mesh, trace.density, args.density_out)
    _emit(records_to_json(records) + "\n" if args.format == "json" else records_to_csv(records), args.out)
    return 0 if np.all(np.diff(trace.sigma_bar) >= 0) else 1


def cmd_study(args):
    kind = args.kind
    if kind == "weinstock":
        records = [weinstock_check(args.refine if args.refine is not None else 5)]
    elif kind == "catenoid":
        records = [catenoid_check(args.refine if args.refine is not None else 3)]
    elif kind == "ceiling":
        records = ceiling_study(seed=args.seed or 0,
                                check_level=args.refine if args.refine is not None else 2)
    elif kind == "convergence":
        if args.mesh:
            mesh, rho = _load(args)
        else:
            mesh = build_disk(2, 8, levels=4 if args.refine is None else args.refine)
            rho = _half_density(mesh)
        if args.family == "heat":
            schedule = args.schedule or [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
        else:
            h = float(mesh.boundary_edge_lengths.min())
            schedule = args.eps_schedule or args.schedule or [8 * h, 4 * h, 2 * h, h]
        records = convergence_study(mesh, rho, schedule, family=args.family, tolerance=args.tolerance)
    elif kind == "gluing":
        if args.mesh:
            mesh, rho = _load(args)
        else:
            mesh = build_cylinder(1.0, 4, 8, levels=3 if args.refine is None else args.refine)
            rho = uniform_density(mesh)
        off = mesh.loop_offsets
        h = float(mesh.boundary_edge_lengths[off[0]:off[1]].min())
        schedule = args.eps_schedule or [8 * h, 4 * h, 2 * h, h]
        records = gluing_study(mesh, rho, schedule, loops=tuple(args.loops), centers=tuple(args.centers))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown study {kind}")
    text = records_to_json(records) + "\n" if args.format == "json" else records_to_csv(records)
    _emit(text, args.out)
    ok = study_passed(records)
    print(f"{kind}: {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    return 0 if ok else 1


def cmd_plot(args):
    with open(args.input) as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError(f"{args.input}: no rows")
    cols = rows[0].keys()

    def col(name):
        for cand in (name, f"obs:{name}", f"param:{name}"):
            if cand in cols:
                return cand
        raise UsageError(f"{args.input}: no column {name!r}; have {', '.join(cols)}")

    xc = col(args.x)
    series = {}
    for y in args.y.split(","):
        yc = col(y)
        xs, ys = [], []
        for lineno, r in enumerate(rows, start=2):
            try:
                xs.append(float(r[xc]))
                ys.append(float(r[yc]))
            except ValueError:
                raise UsageError(f"{args.input}: line {lineno}: non-numeric value") from None
        series[y] = (xs, ys)
    svg = line_chart(series, title=args.title or "", xlabel=args.x, ylabel=args.y,
                     logx=args.logx, logy=args.logy)
    _emit(svg, args.out)
    return 0


# parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--mesh", help="mesh file")
    common.add_argument("--density", help="density CSV (loop,edge,value)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"),
                        help="output format (spectrum: json, otherwise csv)")
    common.add_argument("--refine", type=int, help="refinement levels")
    common.add_argument("--seed", type=int, help="seed for a random initial density")

    p = _Parser(prog="steklov-lab", description="Steklov eigenvalue experiments")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    m = sub.add_parser("mesh", parents=[common], help="build, puncture, glue or validate meshes")
    m.add_argument("action", choices=("build", "puncture", "glue", "validate"))
    m.add_argument("shape", nargs="?", choices=("disk", "cylinder"), default="disk")
    m.add_argument("--rings", type=int, default=2)
    m.add_argument("--sectors", type=int, default=8)
    m.add_argument("--radius", type=float, default=1.0)
    m.add_argument("--half-height", type=float, help="cylinder half-height (default: critical)")
    m.add_argument("--axial", type=int, default=4)
    m.add_argument("--circ", type=int, default=8)
    m.add_argument("--vertex", type=int)
    m.add_argument("--edges", type=int, help="edges per glued arc")
    m.add_argument("--loops", type=_ints, default=[0, 1])
    m.add_argument("--centers", type=_ints, default=[0, 0])
    m.set_defaults(func=cmd_mesh)

    s = sub.add_parser("spectrum", parents=[common], help="Steklov spectrum of a mesh and density")
    s.add_argument("--count", type=int, default=8)
    s.add_argument("--gap-tol", type=float, default=GAP_TOL)
    s.set_defaults(func=cmd_spectrum)

    o = sub.add_parser("optimize", parents=[common], help="maximize the normalized first eigenvalue")
    o.add_argument("--max-iters", type=int, default=200)
    o.add_argument("--floor-fraction", type=float, default=0.5,
                   help="lower bound on the density as a fraction of its mean")
    o.add_argument("--gap-tol", type=float, default=1e-3)
    o.add_argument("--density-out", help="write the final density here")
    o.set_defaults(func=cmd_optimize)

    st = sub.add_parser("study", parents=[common], help="run an experiment")
    st.add_argument("kind", choices=("convergence", "gluing", "weinstock", "catenoid", "ceiling"))
    st.add_argument("--family", choices=("heat", "arcs"), default="heat")
    st.add_argument("--schedule", type=_floats, help="decreasing t (or eps) values")
    st.add_argument("--eps-schedule", type=_floats, help="decreasing arc half-lengths")
    st.add_argument("--tolerance", type=float, default=1e-3)
    st.add_argument("--loops", type=_ints, default=[0, 1])
    st.add_argument("--centers", type=_ints, default=[0, 0])
    st.set_defaults(func=cmd_study)

    pl = sub.add_parser("plot", help="line chart of a CSV file as SVG")
    pl.add_argument("input")
    pl.add_argument("--x", required=True)
    pl.add_argument("--y", required=True, help="comma-separated columns")
    pl.add_argument("--title")
    pl.add_argument("--logx", action="store_true")
    pl.add_argument("--logy", action="store_true")
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (MeshError, DensityError, OSError, ValueError) as exc:
        # malformed input, impossible gluing, bad schedule
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpectrumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
