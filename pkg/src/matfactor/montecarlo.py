"""Monte-Carlo replication engine for the simulation table.

Each replication draws its data from a Philox stream keyed by
``(base_seed, cell index, method index, replication index)``, so results do
not depend on worker count or scheduling.  Loading and factor RMSEs are scored
on fits at the true factor counts; ``Mean``/``CP`` columns use the counts
picked by the ratio criterion on the same data.
"""

from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dgp import STRENGTH_CASES, DgpConfig, make_rng, simulate
from .errors import CellAborted, ConfigError, Empty, MatFactorError
from .metrics import McResult, ReplicationScore, aggregate, factor_space_distance, projection_distance
from .mpanic import diff_spectra, fit_mpanic
from .mpca import fit_mpca, spectra

log = logging.getLogger(__name__)

METHODS = ("mPCA", "mPANIC")
DEFAULT_KINDS = {"mPCA": "i1", "mPANIC": "ecm"}
MAX_FAIL_FRACTION = 0.01
CSV_FIELDS = ("cell", "method", "rmse_R", "rmse_C", "rmse_F", "mean_r1", "cp_r1",
              "mean_r2", "cp_r2", "reps", "seed")
SEL_FIELDS = ("rmse_R_sel", "rmse_C_sel", "rmse_F_sel")


def canonical_method(name: str) -> str:
    for m in METHODS:
        if name.lower() == m.lower():
            return m
    raise ConfigError(f"unknown method {name!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class McCell:
    T: int
    p1: int
    p2: int
    case: str = "i"

    @property
    def name(self) -> str:
        return f"T={self.T},p1={self.p1},p2={self.p2},case={self.case}"

    @classmethod
    def parse(cls, text: str) -> "McCell":
        """Parse ``"T=50,p1=30,p2=30,case=i"`` (``p=30`` sets both sides)."""
        fields = {}
        for part in text.split(","):
            key, sep, value = part.partition("=")
            if not sep:
                raise ConfigError(f"malformed cell {text!r}: expected key=value pairs")
            fields[key.strip()] = value.strip()
        if "p" in fields:
            p = fields.pop("p")
            fields.setdefault("p1", p)
            fields.setdefault("p2", p)
        unknown = set(fields) - {"T", "p1", "p2", "case"}
        if unknown:
            raise ConfigError(f"unknown cell keys {sorted(unknown)} in {text!r}")
        try:
            cell = cls(int(fields["T"]), int(fields["p1"]), int(fields["p2"]), fields.get("case", "i"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"malformed cell {text!r}: {exc}") from None
        if cell.case not in STRENGTH_CASES:
            raise ConfigError(f"unknown strength case {cell.case!r} in {text!r}")
        return cell


TABLE1_CELLS = tuple(
    McCell(T, p, p, case)
    for case in ("i", "ii", "iii")
    for T, p in ((50, 30), (100, 30), (100, 60))
)


@dataclass(frozen=True)
class McDesign:
    cells: tuple = TABLE1_CELLS
    replications: int = 200
    methods: tuple = METHODS
    base_seed: int = 20250101
    K: int = 10
    base: DgpConfig = field(default_factory=DgpConfig)
    factor_kinds: tuple = tuple(DEFAULT_KINDS.items())
    score_selected: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(canonical_method(m) for m in self.methods))
        object.__setattr__(self, "cells", tuple(self.cells))
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not self.cells:
            raise ConfigError("a design needs at least one cell")
        if not self.methods:
            raise ConfigError("a design needs at least one method")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")

    def kind_for(self, method: str) -> str:
        return dict(self.factor_kinds)[method]

    def cell_config(self, cell: McCell, method: str) -> DgpConfig:
        strengths = STRENGTH_CASES[cell.case]
        r1, r2 = self.base.r1, self.base.r2
        return self.base.with_(
            T=cell.T, p1=cell.p1, p2=cell.p2,
            row_strengths=_pad(strengths, r1), col_strengths=_pad(strengths, r2),
            factor_kind=self.kind_for(method),
        )


def _pad(strengths, r):
    s = tuple(strengths)[:r]
    return s + (s[-1],) * (r - len(s))


def run_replication(config: DgpConfig, method: str, seed_key: Sequence[int], K: int = 10,
                    score_selected: bool = False) -> ReplicationScore:
    """Simulate once and score one estimator.

    The eigen-decomposition is shared between the selection fit (bounds
    ``K``) and the fit at the true counts used for the RMSE columns.
    """
    method = canonical_method(method)
    truth = simulate(config, make_rng(*seed_key))
    X = truth.X
    if method == "mPCA":
        fit, spec = fit_mpca, spectra(X)
    else:
        fit, spec = fit_mpanic, diff_spectra(X)
    K1 = min(K, config.p1 - 1)
    K2 = min(K, config.p2 - 1)
    selected = fit(X, K1=K1, K2=K2, spectra_=spec)
    at_truth = fit(X, r1=config.r1, r2=config.r2, spectra_=spec)
    extra = {}
    if score_selected:
        extra = dict(
            rmse_R_sel=projection_distance(selected.R_hat, truth.U_R),
            rmse_C_sel=projection_distance(selected.C_hat, truth.V_C),
            rmse_F_sel=factor_space_distance(selected.F_hat, truth.F),
        )
    return ReplicationScore(
        rmse_R=projection_distance(at_truth.R_hat, truth.U_R),
        rmse_C=projection_distance(at_truth.C_hat, truth.V_C),
        rmse_F=factor_space_distance(at_truth.F_hat, truth.F),
        r1_hat=selected.r1,
        r2_hat=selected.r2,
        method=method,
        **extra,
    )


def _task(args):
    config, method, key, K, score_selected = args
    try:
        return run_replication(config, method, key, K, score_selected)
    except MatFactorError as exc:
        return exc
    except np.linalg.LinAlgError as exc:
        return exc


def run_design(design: McDesign, workers: int = 1, on_result=None) -> list[McResult]:
    """Run every (cell, method) block of ``design``.

    Output order is cell order, then method order.  ``on_result`` is called
    with each finished :class:`McResult` (used to flush partial tables).
    """
    results = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for ci, cell in enumerate(design.cells):
            for method in design.methods:
                mi = METHODS.index(method)
                config = design.cell_config(cell, method)
                tasks = [
                    (config, method, (design.base_seed, ci, mi, rep), design.K, design.score_selected)
                    for rep in range(design.replications)
                ]
                if pool is None:
                    outcomes = [_task(t) for t in tasks]
                else:
                    outcomes = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
                scores = [o for o in outcomes if isinstance(o, ReplicationScore)]
                failed = len(outcomes) - len(scores)
                for rep, o in enumerate(outcomes):
                    if not isinstance(o, ReplicationScore):
                        log.warning("%s %s replication %d failed: %s: %s",
                                    cell.name, method, rep, type(o).__name__, o)
                if failed > MAX_FAIL_FRACTION * len(outcomes):
                    raise CellAborted(
                        f"{cell.name} {method}: {failed} of {len(outcomes)} replications failed"
                    )
                result = aggregate(scores, config.r1, config.r2, cell=cell.name,
                                   seed=design.base_seed, failed=failed)
                results.append(result)
                if on_result is not None:
                    on_result(result)
    finally:
        if pool is not None:
            pool.shutdown()
    return results


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def results_to_csv(results: Sequence[McResult]) -> str:
    results = list(results)
    if not results:
        raise Empty("no results to write")
    with_sel = any(r.rmse_R_sel is not None for r in results)
    fields = CSV_FIELDS + (SEL_FIELDS if with_sel else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in results:
        w.writerow([_fmt(getattr(r, f)) for f in fields])
    return buf.getvalue()


def results_from_csv(text: str) -> list[McResult]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        kw = {k: row[k] for k in ("cell", "method")}
        for k in ("rmse_R", "rmse_C", "rmse_F", "mean_r1", "cp_r1", "mean_r2", "cp_r2"):
            kw[k] = float(row[k])
        kw["reps"] = int(row["reps"])
        kw["seed"] = int(row["seed"])
        for k in SEL_FIELDS:
            if row.get(k) not in (None, ""):
                kw[k] = float(row[k])
        out.append(McResult(**kw))
    return out


def results_to_text(results: Sequence[McResult]) -> str:
    results = list(results)
    if not results:
        raise Empty("no results to write")
    header = f"{'cell':<30} {'RMSE(R)':>8} {'RMSE(C)':>8} {'RMSE(F)':>8} " \
             f"{'Mean(r1)':>8} {'CP(r1)':>7} {'Mean(r2)':>8} {'CP(r2)':>7} {'reps':>5} {'fail':>4}"
    lines = []
    panels = (("Panel A: mPCA estimation", "mPCA"), ("Panel B: mPANIC estimation", "mPANIC"))
    for title, method in panels:
        rows = [r for r in results if r.method == method]
        if not rows:
            continue
        if lines:
            lines.append("")
        lines += [title, header, "-" * len(header)]
        for r in rows:
            lines.append(
                f"{r.cell:<30} {r.rmse_R:8.3f} {r.rmse_C:8.3f} {r.rmse_F:8.3f} "
                f"{r.mean_r1:8.3f} {r.cp_r1:7.3f} {r.mean_r2:8.3f} {r.cp_r2:7.3f} {r.reps:5d} {r.failed:4d}"
            )
    return "\n".join(lines) + "\n"


def emit_table(results: Sequence[McResult]) -> tuple[str, str]:
    """Render results as ``(text, csv)``; mPCA rows precede mPANIC rows in the text."""
    return results_to_text(results), results_to_csv(results)
