"""Command-line entry point: ``roughuniform <verb> ...``.

Every verb prints a JSON document; ``--out DIR`` writes it to
``DIR/report.json`` instead (experiments add one CSV per table, model
builders write ``graph.json`` / ``map.json``).  The exit code is 0 iff
every check the verb performs passes, 2 on input errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from .busemann import AnchorError, anchor_from_space, busemann_field
from .experiments import (
    ExperimentReport,
    _clean,
    experiment_counterexample,
    experiment_lemmas,
    experiment_theorem,
    model_delta,
)
from .hyperbolicity import CapExceeded, delta_four_point
from .metric import GraphError, load_graph, save_graph
from .models import HalfPlaneGrid, binary_tree, halfplane_grid, net_map, scaled_space
from .roughiso import busemann_transport_check, deformed_transport_check, load_map, push_anchor, quasi_inverse
from .uniformity import estimate_uniformity
from .uniformize import HarnackWarning, deform, harnack_check, make_density

log = logging.getLogger("roughuniform")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _emit(doc: dict, out: str | None, name: str = "report.json") -> None:
    text = json.dumps(_clean(doc), indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / name, "w", encoding="utf-8") as fh:
        fh.write(text)


def _rel(path: str, out: str | None) -> str:
    """Path as seen from the directory the map file will live in."""
    return os.path.relpath(path, out or ".")


def _summary(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=float)
    return {"min": float(a.min()), "max": float(a.max()), "mean": float(a.mean())}


def _delta_for(space, given):
    if given is not None:
        return float(given), "given"
    return model_delta(space)


def _field(space, anchor_name, delta, base=None):
    anchor = anchor_from_space(space, anchor_name, base)
    return busemann_field(space, anchor, delta)


# ---------------------------------------------------------------------------
# verbs


def cmd_model(args) -> int:
    if args.kind == "halfplane":
        params = HalfPlaneGrid(
            x_range=(args.x_min, args.x_max),
            y_range=(args.y_min, args.y_max),
            m=args.m,
            h=args.h,
            qmax=args.qmax,
            pins=tuple(_floats(args.pins)) if args.pins else (),
        )
        space = halfplane_grid(params)
    elif args.kind == "tree":
        space = binary_tree(args.depth, args.edge_len, args.tail)
    elif args.kind == "scale":
        if not args.graph:
            raise GraphError("model scale needs a graph file")
        space, sim = scaled_space(load_graph(args.graph[0]), args.kappa)
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            save_graph(space, Path(args.out) / "graph.json")
            doc = {"source": _rel(args.graph[0], args.out), "target": "graph.json", "map": sim.mapping(),
                   "kappa": sim.kappa, "tau": sim.tau}
            _emit(doc, args.out, "map.json")
            return 0
        _emit(space.to_dict(), None)
        return 0
    elif args.kind == "net":
        if len(args.graph) != 2:
            raise GraphError("model net needs FINE and COARSE graph files")
        fine, coarse = load_graph(args.graph[0]), load_graph(args.graph[1])
        iso = net_map(fine, coarse, args.by)
        doc = {"source": _rel(args.graph[0], args.out), "target": _rel(args.graph[1], args.out),
               "map": iso.mapping(), "lambda": iso.lam, "tau": iso.tau}
        _emit(doc, args.out, "map.json")
        return 0
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(args.kind)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        save_graph(space, Path(args.out) / "graph.json")
    else:
        _emit(space.to_dict(), None)
    return 0


def cmd_delta(args) -> int:
    space = load_graph(args.graph)
    try:
        rep = delta_four_point(space, sampled=args.sampled, seed=args.seed, cap=args.cap)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(rep.to_dict(), args.out)
    return 0


def cmd_busemann(args) -> int:
    space = load_graph(args.graph)
    delta, mode = _delta_for(space, args.delta)
    fld = _field(space, args.anchor, delta, args.base)
    doc = {
        "anchor": args.anchor,
        "base": fld.base,
        "delta": delta,
        "delta_mode": mode,
        "error_bound": fld.error_bound,
        "uncertified": list(fld.uncertified),
        "values": {v: float(x) for v, x in zip(space.ids, fld.values)},
    }
    _emit(doc, args.out)
    return 0


def _deformed(args, space):
    delta, _ = _delta_for(space, args.delta)
    fld = _field(space, args.anchor, delta)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", HarnackWarning)
        dens = make_density(fld, args.epsilon)
    for w in caught:
        log.warning("%s", w.message)
    return deform(space, dens, tail=args.tail), dens


def cmd_uniformize(args) -> int:
    space = load_graph(args.graph)
    D, dens = _deformed(args, space)
    hr = harnack_check(dens, pairs=args.pairs, seed=args.seed)
    off = D.dist_eps[np.triu_indices(space.n, 1)]
    doc = {
        "epsilon": args.epsilon,
        "tail": D.tail_rule,
        "dist_eps": _summary(off) if len(off) else {},
        "snap_slack": D.snap_slack,
        "delta_eps": {v: float(x) for v, x in zip(space.ids, D.delta_eps)},
        "harnack": {
            "C": dens.harnack_C,
            "adjacent_violations": [list(v) for v in dens.violations],
            "pairs": hr.pairs,
            "violations": hr.violations,
            "worst_margin": hr.worst_margin,
            "worst_pair": list(hr.worst_pair),
        },
    }
    _emit(doc, args.out)
    return 0 if hr.violations == 0 and not dens.violations else 1


def _pairs_arg(text: str):
    if text == "all":
        return "all"
    if text.isdigit():
        return int(text)
    with open(text, encoding="utf-8") as fh:
        data = json.load(fh)
    return [tuple(p) for p in data]


def cmd_uniformity(args) -> int:
    space = load_graph(args.graph)
    D, _ = _deformed(args, space)
    rep = estimate_uniformity(D, _pairs_arg(args.pairs), args.families, seed=args.seed)
    _emit(rep.to_dict(), args.out)
    return 0


def cmd_roughiso(args) -> int:
    iso = load_map(args.map)
    doc = {"lambda": iso.lam, "tau": iso.tau, "source_n": iso.source.n, "target_n": iso.target.n}
    ok = True
    if args.action == "inverse":
        back, ir = quasi_inverse(iso)
        doc.update(
            inverse_lambda=back.lam,
            inverse_tau=back.tau,
            source_roundtrip=ir.source_roundtrip,
            target_roundtrip=ir.target_roundtrip,
            source_ok=ir.source_ok,
            target_ok=ir.target_ok,
        )
        ok = ir.source_ok and ir.target_ok
    elif args.action == "transport":
        if not args.anchor:
            raise GraphError("roughiso transport needs --anchor")
        dY, _ = _delta_for(iso.source, args.delta)
        dX, _ = _delta_for(iso.target, args.delta)
        delta = max(dY, dX)
        anchor = anchor_from_space(iso.source, args.anchor)
        fY = busemann_field(iso.source, anchor, delta)
        fX = busemann_field(iso.target, push_anchor(iso, anchor, delta), delta)
        bt = busemann_transport_check(iso, fY, fX)
        doc["busemann"] = {
            "deviation": bt.deviation,
            "witness": bt.witness,
            "bound_5lambda": bt.bound_5lambda,
            "bound_3lambda_4delta": bt.bound_3lambda_4delta,
            "pass_5lambda": bt.pass_5lambda,
            "pass_3lambda_4delta": bt.pass_3lambda_4delta,
        }
        ok = bt.pass_5lambda and bt.pass_3lambda_4delta
        if args.epsilon is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", HarnackWarning)
                DY = deform(iso.source, make_density(fY, args.epsilon), tail=args.tail)
                DX = deform(iso.target, make_density(fX, args.epsilon), tail=args.tail)
            dt = deformed_transport_check(iso, DY, DX, pairs=args.pairs, seed=args.seed)
            doc["deformed"] = {
                "epsilon": args.epsilon,
                "pairs": dt.pairs,
                "dist_ratio": [dt.dist_ratio_min, dt.dist_ratio_max],
                "delta_ratio": [dt.delta_ratio_min, dt.delta_ratio_max],
                "flagged": [list(f) for f in dt.flagged],
            }
            ok = ok and not dt.flagged
    _emit(doc, args.out)
    return 0 if ok else 1


def _finish(rep: ExperimentReport, out: str | None) -> int:
    if out:
        rep.write(out)
        print(rep.summary(), file=sys.stderr)
    else:
        sys.stdout.write(rep.to_json())
    return 0 if rep.passed else 1


def cmd_experiment(args) -> int:
    if args.which == "counterexample":
        gp = {"m": args.m, "h": args.h}
        rep = experiment_counterexample(_floats(args.eps), _floats(args.R), gp)
    elif args.which == "theorem":
        rep = experiment_theorem(
            epsilon=args.epsilon, m=args.m, h=args.h, pairs=args.pairs, seed=args.seed
        )
    else:
        if not args.graph:
            raise GraphError("experiment lemmas needs a graph file")
        space = load_graph(args.graph)
        rep = experiment_lemmas(space, args.anchor, args.epsilon, seed=args.seed, delta=args.delta)
    return _finish(rep, args.out)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="roughuniform", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, out_help="write report.json into DIR instead of stdout"):
        sp.add_argument("--out", metavar="DIR", help=out_help)

    m = sub.add_parser("model", help="build model spaces and maps")
    m.add_argument("kind", choices=["halfplane", "tree", "scale", "net"])
    m.add_argument("graph", nargs="*", help="input graph(s) for scale (one) and net (fine, coarse)")
    m.add_argument("--x-min", type=float, default=-4.0)
    m.add_argument("--x-max", type=float, default=4.0)
    m.add_argument("--y-min", type=float, default=0.125)
    m.add_argument("--y-max", type=float, default=8.0)
    m.add_argument("--m", type=int, default=16, help="rows per doubling of height")
    m.add_argument("--h", type=float, default=0.5, help="horizontal hyperbolic spacing")
    m.add_argument("--qmax", type=int, default=30)
    m.add_argument("--pins", default="", help="comma-separated x values present in every row")
    m.add_argument("--depth", type=int, default=6)
    m.add_argument("--edge-len", type=float, default=1.0)
    m.add_argument("--tail", type=int, default=3)
    m.add_argument("--kappa", type=float, default=2.0)
    m.add_argument("--by", choices=["coords", "ids"], default=None)
    common(m, "write graph.json (or map.json) into DIR instead of stdout")
    m.set_defaults(func=cmd_model)

    d = sub.add_parser("delta", help="four-point hyperbolicity constant")
    d.add_argument("graph")
    d.add_argument("--sampled", type=int, default=None)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--cap", type=int, default=300)
    common(d)
    d.set_defaults(func=cmd_delta)

    def field_args(sp):
        sp.add_argument("--anchor", required=True)
        sp.add_argument("--delta", type=float, default=None, help="override the hyperbolicity constant")

    b = sub.add_parser("busemann", help="Busemann field of an anchor")
    b.add_argument("graph")
    field_args(b)
    b.add_argument("--base", default=None)
    common(b)
    b.set_defaults(func=cmd_busemann)

    def deform_args(sp):
        field_args(sp)
        sp.add_argument("--epsilon", type=float, required=True)
        sp.add_argument("--tail", choices=["analytic", "geometric"], default="geometric")
        sp.add_argument("--seed", type=int, default=0)

    u = sub.add_parser("uniformize", help="deformed metric and boundary distance")
    u.add_argument("graph")
    deform_args(u)
    u.add_argument("--pairs", type=int, default=1000, help="seeded Harnack pairs")
    common(u)
    u.set_defaults(func=cmd_uniformize)

    un = sub.add_parser("uniformity", help="empirical uniformity constant")
    un.add_argument("graph")
    deform_args(un)
    un.add_argument("--pairs", default="50", help="all | N | JSON file of id pairs")
    un.add_argument("--families", default="g,b,t")
    common(un)
    un.set_defaults(func=cmd_uniformity)

    r = sub.add_parser("roughiso", help="certify and transport across a vertex map")
    r.add_argument("action", choices=["certify", "inverse", "transport"])
    r.add_argument("map")
    r.add_argument("--anchor", default=None)
    r.add_argument("--delta", type=float, default=None)
    r.add_argument("--epsilon", type=float, default=None)
    r.add_argument("--tail", choices=["analytic", "geometric"], default="geometric")
    r.add_argument("--pairs", type=int, default=2000)
    r.add_argument("--seed", type=int, default=0)
    common(r)
    r.set_defaults(func=cmd_roughiso)

    e = sub.add_parser("experiment", help="experiment drivers with verdicts")
    e.add_argument("which", choices=["counterexample", "theorem", "lemmas"])
    e.add_argument("graph", nargs="?", help="graph file (lemmas)")
    e.add_argument("--anchor", default="omega")
    e.add_argument("--epsilon", type=float, default=1.0)
    e.add_argument("--eps", default="0.5,1,2", help="epsilon list (counterexample)")
    e.add_argument("--R", default="1,2,3", help="R list (counterexample)")
    e.add_argument("--m", type=int, default=16)
    e.add_argument("--h", type=float, default=0.5)
    e.add_argument("--pairs", type=int, default=20)
    e.add_argument("--delta", type=float, default=None)
    e.add_argument("--seed", type=int, default=0)
    common(e, "write report.json and CSV tables into DIR")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (GraphError, AnchorError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
