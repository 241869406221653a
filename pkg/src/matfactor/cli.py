"""Command-line entry point: ``matfactor {simulate,fit,mc}``.

Exit codes: 0 on success, 1 for I/O or parse failures, 2 for numerical or
degenerate-input failures.  Errors are reported on stderr as
``error: <ErrorName>: <message>``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baseline import fit_vectorized
from .config import bundled_design_path, dump_flat_toml, load_design, load_dgp_config
from .dgp import simulate
from .errors import MatFactorError
from .montecarlo import results_to_csv, results_to_text, run_design
from .mpanic import fit_mpanic
from .mpca import default_k, fit_mpca, ratio_criterion
from .panel import PanelSchema, load_panel, write_matrix, write_panel

log = logging.getLogger("matfactor")

NORM_FLAGS = {"row": "row", "col": "col", "sum": "sum"}


def _write_csv_rows(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(x) if not isinstance(x, float) else format(x, ".17g") for x in row) + "\n")


def heatmap_matrix(R_hat: np.ndarray, C_hat: np.ndarray) -> np.ndarray:
    """Global min-max rescaling of ``R_hat C_hat^T`` to [0, 1].

    With ``r1 != r2`` only the leading ``min(r1, r2)`` columns are paired.
    """
    m = min(R_hat.shape[1], C_hat.shape[1])
    M = R_hat[:, :m] @ C_hat[:, :m].T
    lo, hi = M.min(), M.max()
    if hi == lo:
        return np.zeros_like(M)
    return (M - lo) / (hi - lo)


def _selection(values, p, K):
    if p < 2:
        return None
    try:
        return ratio_criterion(values, default_k(p) if K is None else min(K, p - 1))
    except MatFactorError:
        return None


def _write_fit(out: Path, fit, X, schema: PanelSchema, args, K1, K2) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rows, cols = schema.rows, schema.cols
    _write_csv_rows(out / "eigvals_row.csv", ("k", "eigenvalue"),
                    [(k + 1, float(v)) for k, v in enumerate(fit.row_eigvals)])
    _write_csv_rows(out / "eigvals_col.csv", ("k", "eigenvalue"),
                    [(k + 1, float(v)) for k, v in enumerate(fit.col_eigvals)])
    names = [f"f_{i + 1}_{j + 1}" for i in range(fit.r1) for j in range(fit.r2)]
    _write_csv_rows(out / "factors.csv", ("t", *names),
                    [(t, *map(float, fit.F_hat[k].reshape(-1))) for k, t in enumerate(schema.times)])
    write_matrix(out / "loadings_R.csv", fit.R_hat, rows, [f"R_{k + 1}" for k in range(fit.r1)])
    write_matrix(out / "loadings_C.csv", fit.C_hat, cols, [f"C_{k + 1}" for k in range(fit.r2)])
    write_matrix(out / "heatmap.csv", heatmap_matrix(fit.R_hat, fit.C_hat), rows, cols)
    row_sel = fit.row_selection or _selection(fit.row_eigvals, len(rows), K1)
    col_sel = fit.col_selection or _selection(fit.col_eigvals, len(cols), K2)
    lines = [
        f"method: {fit.method}",
        f"r1: {fit.r1}",
        f"r2: {fit.r2}",
        f"r1_hat: {row_sel.r_hat if row_sel else 1}",
        f"r2_hat: {col_sel.r_hat if col_sel else 1}",
        f"row_ratios: {' '.join(format(x, '.17g') for x in row_sel.ratios) if row_sel else ''}",
        f"col_ratios: {' '.join(format(x, '.17g') for x in col_sel.ratios) if col_sel else ''}",
        f"T: {X.shape[0]}",
        f"p1: {X.shape[1]}",
        f"p2: {X.shape[2]}",
        f"normalization: {fit.normalization}",
        f"demean: {'on' if fit.demeaned else 'off'}",
        f"transform: {schema.transform}",
        f"K1: {K1 if K1 is not None else default_k(X.shape[1])}",
        f"K2: {K2 if K2 is not None else default_k(X.shape[2])}",
        f"r1_supplied: {args.r1 if args.r1 is not None else ''}",
        f"r2_supplied: {args.r2 if args.r2 is not None else ''}",
        f"input: {args.input}",
        f"row_order: {' '.join(rows)}",
        f"col_order: {' '.join(cols)}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


def _write_vectorized(out: Path, X, schema: PanelSchema, args) -> None:
    out.mkdir(parents=True, exist_ok=True)
    vf = fit_vectorized(X, r=args.r1, K=args.k)
    _write_csv_rows(out / "eigvals.csv", ("k", "eigenvalue"),
                    [(k + 1, float(v)) for k, v in enumerate(vf.eigvals)])
    _write_csv_rows(out / "factors.csv", ("t", *[f"f_{k + 1}" for k in range(vf.r)]),
                    [(t, *map(float, vf.factors[k])) for k, t in enumerate(schema.times)])
    labels = [f"{r}|{c}" for c in schema.cols for r in schema.rows]
    write_matrix(out / "loadings.csv", vf.loadings, labels, [f"L_{k + 1}" for k in range(vf.r)], corner="row|col")
    sel = vf.selection
    lines = [
        "method: vectorized",
        f"r: {vf.r}",
        f"r_hat: {vf.r_hat if vf.r_hat is not None else ''}",
        f"ratios: {' '.join(format(x, '.17g') for x in sel.ratios) if sel else ''}",
        f"T: {X.shape[0]}",
        f"p1: {X.shape[1]}",
        f"p2: {X.shape[2]}",
        f"transform: {schema.transform}",
        f"input: {args.input}",
    ]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


def cmd_fit(args) -> int:
    X, schema = load_panel(args.input, transform=args.transform)
    demean = args.demean == "on"
    K1 = K2 = args.k
    if K1 is not None:
        K1, K2 = min(K1, X.shape[1] - 1), min(K2, X.shape[2] - 1)
    out = Path(args.out)
    methods = {"both": ("mpca", "mpanic")}.get(args.method, (args.method,))
    for method in methods:
        target = out / method if len(methods) > 1 else out
        if method == "vectorized":
            Xv = X - X.mean(axis=0) if demean else X
            _write_vectorized(target, Xv, schema, args)
            continue
        fit = (fit_mpca if method == "mpca" else fit_mpanic)(
            X, r1=args.r1, r2=args.r2, K1=K1, K2=K2, normalization=NORM_FLAGS[args.norm], demean=demean
        )
        Xf = X - X.mean(axis=0) if demean else X
        _write_fit(target, fit, Xf, schema, args, K1, K2)
        log.info("%s: r1=%d r2=%d -> %s", fit.method, fit.r1, fit.r2, target)
    return 0


def cmd_simulate(args) -> int:
    config = load_dgp_config(args.config)
    if args.seed is not None:
        config = config.with_(seed=args.seed)
    truth = simulate(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_panel(out / "X.csv", truth.X)
    write_panel(out / "E.csv", truth.E)
    T, r1, r2 = truth.F.shape
    write_panel(out / "F.csv", truth.F, rows=[f"f{i + 1}" for i in range(r1)], cols=[f"g{j + 1}" for j in range(r2)])
    write_matrix(out / "R.csv", truth.R, [f"r{i + 1}" for i in range(config.p1)])
    write_matrix(out / "C.csv", truth.C, [f"c{j + 1}" for j in range(config.p2)])
    (out / "config.toml").write_text(dump_flat_toml(config.to_dict()))
    return 0


def cmd_mc(args) -> int:
    design = load_design(args.design or bundled_design_path())
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.reps is not None:
        changes["replications"] = args.reps
    if changes:
        from dataclasses import replace

        design = replace(design, **changes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    done = []

    def flush(result):
        done.append(result)
        (out / "table.csv").write_text(results_to_csv(done))
        (out / "table.txt").write_text(results_to_text(done))

    run_design(design, workers=args.workers, on_result=flush)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matfactor", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw one dataset from a DGP config file")
    s.add_argument("config", help="flat TOML file with DgpConfig keys")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, metavar="DIR")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a long-format panel")
    f.add_argument("input", help="CSV with header t,row,col,value")
    f.add_argument("--method", choices=("mpca", "mpanic", "both", "vectorized"), default="both")
    f.add_argument("--r1", type=int)
    f.add_argument("--r2", type=int)
    f.add_argument("--k", type=int, help="upper bound for the ratio criterion (default min(10, p-1))")
    f.add_argument("--norm", choices=tuple(NORM_FLAGS), default="row")
    f.add_argument("--demean", choices=("on", "off"), default="on")
    f.add_argument("--transform", choices=("none", "log", "logdiff"), default="none")
    f.add_argument("--out", required=True, metavar="DIR")
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("mc", help="run a Monte-Carlo design")
    m.add_argument("design", nargs="?", help="flat TOML design (default: bundled table1_desk.toml)")
    m.add_argument("--seed", type=int, help="override base_seed")
    m.add_argument("--reps", type=int, help="override replications")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", required=True, metavar="DIR")
    m.set_defaults(func=cmd_mc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MatFactorError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
