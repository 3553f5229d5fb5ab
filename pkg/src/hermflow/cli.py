"""Command-line entry point: generate, cluster, sweep, trade and rerun.

Every subcommand writes only inside ``--out`` and leaves a ``manifest.json``
there holding the resolved parameters, seeds, input paths and stage
timings; ``rerun`` replays a manifest into a fresh directory.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from collections import defaultdict
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from . import io as hio
from .cluster import ClusteringError, KMeansConfig, simple_herm, spectral_embedding
from .digraph import GraphError
from .dsbm import VARIANTS, DsbmParams, generate
from .eigensolver import ConvergenceError, SolverConfig
from .evaluation import adjusted_rand_index, dd_sym_baseline, drift_series, herm_rw_baseline
from .experiments import METHODS, PROTOCOLS, mean_rows, run_sweep
from .sparsify import SparsifierConfig, preservation_report, sparsify
from .trade import ParseDiagnostics, TradeError, build_trade_graph, iter_trade_csv

log = logging.getLogger("hermflow")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

MANIFEST = "manifest.json"


class _Timer:
    """Accumulates wall-clock seconds per named stage."""

    def __init__(self):
        self.stages = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t0


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _params(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _write_manifest(out: Path, args, timer: _Timer, seeds, inputs, outputs, argv=None, extra=None):
    data = {
        "subcommand": args.command,
        "argv": list(argv) if argv is not None else None,
        "params": _params(args),
        "seeds": seeds,
        "inputs": [str(p) for p in inputs],
        "outputs": sorted(str(p) for p in outputs) + [MANIFEST],
        "version": __version__,
        "timings": timer.stages,
    }
    if extra:
        data.update(extra)
    hio.write_json(out / MANIFEST, data)


# -- subcommands ----------------------------------------------------------------


def cmd_generate(args, argv=None) -> int:
    timer = _Timer()
    params = DsbmParams(args.n, args.k, args.p, args.q, args.eta, args.variant, args.seed)
    out = _out_dir(args)
    with timer.stage("generate"):
        g, truth = generate(params)
    with timer.stage("write"):
        hio.write_edge_list(g, out / "graph.tsv", header=" ".join(f"{k}={v}" for k, v in params.as_dict().items()))
        hio.write_ground_truth(out / "ground_truth.csv", truth.labels)
    _write_manifest(out, args, timer, {"dsbm": args.seed}, [], ["graph.tsv", "ground_truth.csv"], argv)
    print(f"wrote {g.m} edges on {g.n} vertices to {out}")
    return EXIT_OK


def _baseline(g, k, name, seed):
    cfg = KMeansConfig(restarts=16, seed=seed)
    return dd_sym_baseline(g, k, cfg) if name == "ddsym" else herm_rw_baseline(g, k, cfg)


def cmd_cluster(args, argv=None) -> int:
    timer = _Timer()
    out = _out_dir(args)
    outputs = ["labels.csv", "diagnostics.json"]
    with timer.stage("load"):
        g = hio.read_edge_list(args.graph, merge_policy=args.merge_policy)
        ids = hio.read_sidecar(args.sidecar) if args.sidecar else None
        if ids is not None and len(ids) != g.n:
            raise GraphError(f"sidecar has {len(ids)} labels for {g.n} vertices")
    if g.active.size < args.k:
        raise ClusteringError(f"k={args.k} exceeds the {g.active.size} non-isolated vertices")
    solver = SolverConfig(tolerance=args.tolerance, seed=args.seed)
    kcfg = KMeansConfig(restarts=args.restarts, seed=args.seed)
    work = g
    report = None
    if args.sparsify:
        with timer.stage("sparsify"):
            scfg = SparsifierConfig(alpha_s=args.alpha_s, lambda2=args.lambda2, seed=args.seed)
            h = sparsify(g, scfg, k=args.k, solver_cfg=solver)
        work = h.graph
        hio.write_edge_list(work, out / "sparsified.tsv")
        outputs.append("sparsified.tsv")
    with timer.stage("simpleherm"):
        c = simple_herm(work, args.k, solver, kcfg)
    for stage, secs in c.diagnostics["timings"].items():
        timer.stages[f"simpleherm.{stage}"] = secs
    diag = hio.clustering_diagnostics(c.diagnostics)
    diag["residual1"] = c.diagnostics["residual1"]
    diag["isolated"] = c.diagnostics["isolated"]
    diag["flags"] = c.diagnostics["eigenvector"].flags
    if args.sparsify:
        with timer.stage("preservation"):
            lam_g = h.diagnostics["lambda2"] if args.lambda2 is None else None
            report = preservation_report(g, h, c.partition, args.k, solver, lambda2_g=lam_g)
        rep = report.as_dict()
        rep.update(expected_retained=h.expected_retained, sparsifier=h.diagnostics)
        hio.write_json(out / "preservation.json", rep)
        outputs.append("preservation.json")
    if args.truth:
        truth = hio.read_ground_truth(args.truth)
        diag["ari"] = adjusted_rand_index(c, truth)
    hio.write_labels(out / "labels.csv", c.raw_labels, c.labels, ids)
    if args.baseline != "none":
        with timer.stage(f"baseline.{args.baseline}"):
            b = _baseline(g, args.k, args.baseline, args.seed)
        hio.write_labels(out / f"labels_{args.baseline}.csv", b.raw_labels, b.labels, ids)
        outputs.append(f"labels_{args.baseline}.csv")
        diag[f"{args.baseline}_phi"] = b.diagnostics["phi"]
        if args.truth:
            diag[f"{args.baseline}_ari"] = adjusted_rand_index(b, truth)
    hio.write_json(out / "diagnostics.json", diag)
    if args.plot:
        from .plotting import plot_embedding

        with timer.stage("plot"):
            emb = spectral_embedding(work, c.diagnostics["eigenvector"])
            plot_embedding(emb.points, c.labels[emb.active], out / "embedding.png", c.centers)
        outputs.append("embedding.png")
    inputs = [args.graph] + [p for p in (args.sidecar, args.truth) if p]
    _write_manifest(out, args, timer, {"solver": args.seed, "kmeans": args.seed}, inputs, outputs, argv)
    print(f"k={args.k} phi={diag['phi']:.6g} lambda1={diag['lambda1']:.6g} lambda2={diag['lambda2']:.6g}")
    return EXIT_OK


def cmd_sweep(args, argv=None) -> int:
    timer = _Timer()
    out = _out_dir(args)
    seeds = list(range(args.seed, args.seed + args.seeds))
    with timer.stage("sweep"):
        rows = run_sweep(args.protocol, n=args.n, seeds=seeds, methods=args.methods, workers=args.workers)
    means = mean_rows(rows)
    hio.write_rows(out / "sweep.csv", ["method", "p", "eta", "seed", "ari"], rows + means)
    outputs = ["sweep.csv"]
    if args.plot:
        from .plotting import plot_sweep

        n = args.n or PROTOCOLS[args.protocol].n
        plot_sweep(means, out / "sweep.png", title=f"{args.protocol}, n={n}")
        outputs.append("sweep.png")
    _write_manifest(out, args, timer, {"cells": seeds}, [], outputs, argv)
    print(f"{len(rows)} rows written to {out / 'sweep.csv'}")
    return EXIT_OK


def _column_map(text: str | None) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise TradeError(f"column mapping {item!r} is not key=column")
        out[key.strip()] = val.strip()
    return out


def cmd_trade(args, argv=None) -> int:
    timer = _Timer()
    out = _out_dir(args)
    cols = _column_map(args.columns)
    by_year = defaultdict(list)
    pdiag = ParseDiagnostics()
    with timer.stage("parse"):
        for path in args.inputs:
            for rec in iter_trade_csv(path, cols, args.commodity, args.years, args.delimiter, pdiag):
                by_year[rec.year].append(rec)
    years = sorted(args.years) if args.years else sorted(by_year)
    report = {"parse": pdiag.as_dict(), "years": {}, "skipped_years": []}
    snapshots, kept_years, outputs = [], [], ["trade_diagnostics.json", "drift.csv"]
    solver = SolverConfig(tolerance=args.tolerance, seed=args.seed)
    kcfg = KMeansConfig(restarts=args.restarts, seed=args.seed)
    for year in years:
        recs = by_year.get(year, [])
        if not recs:
            log.warning("no records for year %s; skipped", year)
            report["skipped_years"].append({"year": year, "reason": "no matching records"})
            continue
        with timer.stage("graph"):
            tg = build_trade_graph(recs)
        if tg.graph.active.size < args.k:
            report["skipped_years"].append({"year": year, "reason": f"fewer than k={args.k} trading countries"})
            continue
        with timer.stage("cluster"):
            c = simple_herm(tg.graph, args.k, solver, kcfg)
        codes = list(tg.index.codes)
        hio.write_edge_list(tg.graph, out / f"graph_{year}.tsv")
        hio.write_sidecar(codes, out / f"countries_{year}.tsv")
        hio.write_labels(out / f"labels_{year}.csv", c.raw_labels, c.labels, codes)
        outputs += [f"graph_{year}.tsv", f"countries_{year}.tsv", f"labels_{year}.csv"]
        yd = dict(tg.diagnostics)
        yd.update(hio.clustering_diagnostics(c.diagnostics))
        yd["chain_start_label"] = args.k - 1  # net exporters; label 0 is the sink end
        report["years"][str(year)] = yd
        snapshots.append({code: int(lab) for code, lab in zip(codes, c.labels.tolist())})
        kept_years.append(year)
    rows = []
    if len(snapshots) >= 2:
        drift = drift_series(snapshots, "count")
        rows = [(kept_years[i], kept_years[i + 1], d) for i, d in enumerate(drift)]
    hio.write_rows(out / "drift.csv", ["year_from", "year_to", "symmetric_difference"], rows)
    if args.plot and rows:
        from .plotting import plot_drift

        plot_drift([f"{a}-{b}" for a, b, _ in rows], [d for *_, d in rows], out / "drift.png")
        outputs.append("drift.png")
    hio.write_json(out / "trade_diagnostics.json", report)
    _write_manifest(out, args, timer, {"solver": args.seed, "kmeans": args.seed}, args.inputs, outputs, argv)
    print(f"clustered {len(kept_years)} year(s); drift rows: {len(rows)}")
    return EXIT_OK


def cmd_rerun(args, argv=None) -> int:
    manifest = hio.read_json(args.manifest)
    params = dict(manifest["params"])
    params["out"] = args.out
    ns = argparse.Namespace(**params)
    return _COMMANDS[ns.command](ns, argv)


_COMMANDS = {
    "generate": cmd_generate,
    "cluster": cmd_cluster,
    "sweep": cmd_sweep,
    "trade": cmd_trade,
    "rerun": cmd_rerun,
}


# -- parser ---------------------------------------------------------------------


def _bool(s: str) -> bool:
    if isinstance(s, bool):
        return s
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def read_config(path: str | Path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment, dashes map to underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _common(p: argparse.ArgumentParser, plot_default: bool = True):
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--plot", type=_bool, default=plot_default, help="render PNG figures (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hermflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a directed stochastic block model")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--p", type=float, required=True)
    g.add_argument("--q", type=float, required=True)
    g.add_argument("--eta", type=float, required=True)
    g.add_argument("--variant", choices=VARIANTS, default="all_pairs")
    _common(g, plot_default=False)

    c = sub.add_parser("cluster", help="cluster an edge list")
    c.add_argument("graph", help="edge list (src<TAB>dst<TAB>weight)")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--sidecar", help="id<TAB>label file naming the vertices")
    c.add_argument("--truth", help="ground-truth CSV for ARI reporting")
    c.add_argument("--merge-policy", choices=("net", "sum", "reject"), default="net")
    c.add_argument("--sparsify", type=_bool, nargs="?", const=True, default=False)
    c.add_argument("--alpha-s", type=float, default=1.0)
    c.add_argument("--lambda2", type=float, default=None, help="lambda2 for the sparsifier (estimated if omitted)")
    c.add_argument("--baseline", choices=("none", "ddsym", "hermrw"), default="none")
    c.add_argument("--tolerance", type=float, default=1e-8)
    c.add_argument("--restarts", type=int, default=16)
    _common(c)

    s = sub.add_parser("sweep", help="ARI over a DSBM parameter grid")
    s.add_argument("--protocol", choices=sorted(PROTOCOLS), required=True)
    s.add_argument("--n", type=int, default=None, help="vertex count (default: protocol scale)")
    s.add_argument("--seeds", type=int, default=5)
    s.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    s.add_argument("--workers", type=int, default=None, help="processes (default from HERMFLOW_THREADS)")
    _common(s)

    t = sub.add_parser("trade", help="per-year clustering of trade CSVs plus drift")
    t.add_argument("inputs", nargs="+")
    t.add_argument("--commodity", default=None, help="commodity code prefix, e.g. 27")
    t.add_argument("--years", type=int, nargs="+", default=None)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--columns", default=None, help="field=column pairs, comma separated")
    t.add_argument("--delimiter", default=",")
    t.add_argument("--tolerance", type=float, default=1e-8)
    t.add_argument("--restarts", type=int, default=16)
    _common(t)

    r = sub.add_parser("rerun", help="replay a manifest into a new directory")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    return ap


def _config_arg(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _parse(argv) -> argparse.Namespace:
    ap = build_parser()
    cfg_path = _config_arg(argv)
    command = next((tok for tok in argv if tok in ap._subparsers._group_actions[0].choices), None)  # noqa: SLF001
    if cfg_path and command:
        cfg = read_config(cfg_path)
        sub = ap._subparsers._group_actions[0].choices[command]  # noqa: SLF001
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - set(actions) - {"help", "config"})
        if unknown:
            raise ValueError(f"{cfg_path}: unknown keys {', '.join(unknown)}")
        defaults = {}
        for key, val in cfg.items():
            action = actions[key]
            action.required = False
            if action.nargs in ("+", "*"):
                conv = action.type or str
                defaults[key] = [conv(v) for v in val.split()]
            else:
                defaults[key] = val  # argparse applies the type to string defaults
        sub.set_defaults(**defaults)
    return ap.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, argv)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GraphError, TradeError, ClusteringError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
