"""Coupled eigenvector/eigenvalue and singular-triple learning rules.

The package couples each vector estimate (eigenvector or singular vector pair)
with a scalar estimate (eigenvalue or singular value) in one ODE system, so
convergence speed is roughly the same from all directions regardless of the
spectrum scale. It ships the averaged and online rule fields under Euclidean
and constant-sum constraints, deterministic integrators and trainers,
stationary-point stability analysis, scikit-learn style estimators, and an
experiment CLI.
"""

__version__ = "0.1.0"

from .estimators import CoupledPCA, CoupledSVD
from .linalg import Spectrum, SvdFactors, make_cross, make_spd, svd_factor, sym_eig
from .rules_pca import PcaRule, PcaState, pca_online_rhs, pca_residual, pca_rhs
from .rules_svd import SvdRule, SvdState, svd_online_rhs, svd_residual, svd_rhs
from .dynamics import RateSchedule, Trajectory, integrate, sample_gaussian, sample_pairs, train_online
from .stability import StabilityReport, analyze_triple, stability_reports

__all__ = [
    "__version__",
    "CoupledPCA",
    "CoupledSVD",
    "Spectrum",
    "SvdFactors",
    "make_cross",
    "make_spd",
    "svd_factor",
    "sym_eig",
    "PcaRule",
    "PcaState",
    "pca_online_rhs",
    "pca_residual",
    "pca_rhs",
    "SvdRule",
    "SvdState",
    "svd_online_rhs",
    "svd_residual",
    "svd_rhs",
    "RateSchedule",
    "Trajectory",
    "integrate",
    "sample_gaussian",
    "sample_pairs",
    "train_online",
    "StabilityReport",
    "analyze_triple",
    "stability_reports",
]
