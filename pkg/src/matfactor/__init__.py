"""Factor models for nonstationary matrix-valued time series.

``X_t = R F_t C^T + E_t`` with ``X`` stored as a ``(T, p1, p2)`` array.
Levels-based estimation lives in :mod:`matfactor.mpca`, the
difference-based variant in :mod:`matfactor.mpanic`.
"""

__version__ = "0.1.0"

from .baseline import VectorizedFit, fit_vectorized
from .dgp import DgpConfig, DgpTruth, make_rng, study_config, simulate
from .errors import InputError, MatFactorError, NumericalError
from .linalg import EigenSystem, qr_orthonormalize, set_eig_backend, sym_eig
from .metrics import (
    aggregate,
    aligned_loadings,
    factor_space_distance,
    projection_distance,
    rotation_oracle_mpanic,
    rotation_oracle_mpca,
)
from .montecarlo import McCell, McDesign, emit_table, run_design, run_replication
from .mpanic import fit_mpanic
from .mpca import FactorFit, RatioSelection, fit_mpca, ratio_criterion
from .panel import load_panel, write_panel

__all__ = [
    "DgpConfig", "DgpTruth", "EigenSystem", "FactorFit", "InputError", "MatFactorError",
    "McCell", "McDesign", "NumericalError", "RatioSelection", "VectorizedFit",
    "aggregate", "aligned_loadings", "emit_table", "factor_space_distance", "fit_mpanic",
    "fit_mpca", "fit_vectorized", "load_panel", "make_rng", "study_config",
    "projection_distance", "qr_orthonormalize", "ratio_criterion", "rotation_oracle_mpanic",
    "rotation_oracle_mpca", "run_design", "run_replication", "set_eig_backend", "simulate",
    "sym_eig", "write_panel",
]
