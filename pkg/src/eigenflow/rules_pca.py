"""Coupled eigenvector/eigenvalue learning rules for a covariance matrix.

Each rule kind pairs a residual (zero-point) function with an averaged ODE
field and an online, sample-driven field. The state couples a weight vector w
with a scalar eigenvalue estimate; the scalar modulates the vector update so
convergence speed does not depend on the unknown eigenvalue scale.

Kinds: L2 and L2_ALA keep ||w|| = 1 at the zero points (ALA drops the norm
correction, assuming w'w ~ 1); SUM_EXACT and SUM_MOD keep 1'w = 1, differing
in the eigenvalue update (Rayleigh quotient vs the 1'Cw form that avoids
computing w'w).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ConstraintDegeneracyError, DimensionError, require_scalar
from .linalg import Spectrum, as_matrix, as_vector, check_symmetric
from .rng import SplitMix64


class PcaRule(Enum):
    L2 = "l2"
    L2_ALA = "l2_ala"
    SUM_EXACT = "sum_exact"
    SUM_MOD = "sum_mod"

    @property
    def is_sum(self) -> bool:
        return self in (PcaRule.SUM_EXACT, PcaRule.SUM_MOD)

    @classmethod
    def from_string(cls, text: str) -> "PcaRule":
        try:
            return cls(text.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown PCA rule kind {text!r}; expected one of {valid}") from None


@dataclass(frozen=True)
class PcaState:
    """One point of the coupled ODE: weight vector plus eigenvalue estimate.

    Also used for field values (time derivatives), which share the shape.
    """

    w: np.ndarray
    lam: float

    def __post_init__(self):
        w = as_vector(self.w, "w")
        if w.size < 2:
            raise DimensionError("w must have dimension >= 2")
        if not np.isfinite(self.lam):
            raise ValueError("lambda estimate must be finite")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "lam", float(self.lam))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.w, [self.lam]])

    @classmethod
    def from_array(cls, z) -> "PcaState":
        z = as_vector(z, "z")
        return cls(w=z[:-1], lam=float(z[-1]))


def _check_pair(C: np.ndarray, s: PcaState) -> np.ndarray:
    C = check_symmetric(C)
    if C.shape[0] != s.w.size:
        raise DimensionError(f"C is {C.shape[0]}x{C.shape[1]} but w has dimension {s.w.size}")
    return C


def pca_residual(kind: PcaRule, C, s: PcaState) -> np.ndarray:
    """Stacked zero-point function; zero exactly at constrained eigenpairs.

    Rows: ``Cw - lam*w`` followed by the constraint row, ``(w'w - 1)/2`` for
    the L2 kinds or ``1'w - 1`` for the constant-sum kinds.
    """
    C = _check_pair(C, s)
    top = C @ s.w - s.lam * s.w
    if kind.is_sum:
        constraint = float(s.w.sum() - 1.0)
    else:
        constraint = 0.5 * (float(s.w @ s.w) - 1.0)
    return np.concatenate([top, [constraint]])


def pca_rhs(kind: PcaRule, C, s: PcaState) -> PcaState:
    """Averaged field of the selected rule kind at state ``s``.

    L2:        w' = lam^-1 (Cw - (w'Cw) w) + (w'w - 1)/2 * w
               lam' = w'Cw - lam w'w
    L2_ALA:    drops the norm-correction term and uses lam' = w'Cw - lam
    SUM_EXACT: w' = lam^-1 (Cw - (1'Cw) w),  lam' = w'Cw/w'w - lam
    SUM_MOD:   same w', lam' = 1'Cw - lam
    """
    C = _check_pair(C, s)
    lam = require_scalar("lambda", s.lam)
    w = s.w
    Cw = C @ w
    if kind.is_sum:
        dw = (Cw - float(Cw.sum()) * w) / lam
        if kind is PcaRule.SUM_EXACT:
            dlam = float(w @ Cw) / float(w @ w) - lam
        else:
            dlam = float(Cw.sum()) - lam
        return PcaState(w=dw, lam=dlam)
    wCw = float(w @ Cw)
    ww = float(w @ w)
    if kind is PcaRule.L2:
        dw = (Cw - wCw * w) / lam + 0.5 * (ww - 1.0) * w
        dlam = wCw - lam * ww
    else:
        dw = (Cw - wCw * w) / lam
        dlam = wCw - lam
    return PcaState(w=dw, lam=dlam)


def pca_online_delta(kind: PcaRule, x: np.ndarray, w: np.ndarray, lam):
    """Single-sample field, broadcasting over leading axes of w/lam/x.

    Returns ``(dw, dlam)`` with the shapes of ``w`` and ``lam``. This kernel
    backs both the scalar-state API and the batched online trainer.
    """
    xi = np.sum(w * x, axis=-1, keepdims=True)
    lam_col = np.asarray(lam)[..., None]
    if kind.is_sum:
        sx = np.sum(x, axis=-1, keepdims=True)
        dw = xi * (x - sx * w) / lam_col
        if kind is PcaRule.SUM_EXACT:
            ww = np.sum(w * w, axis=-1, keepdims=True)
            dlam = xi[..., 0] ** 2 / ww[..., 0] - np.asarray(lam)
        else:
            dlam = (sx * xi)[..., 0] - np.asarray(lam)
        return dw, dlam
    if kind is PcaRule.L2:
        ww = np.sum(w * w, axis=-1, keepdims=True)
        dw = xi * (x - xi * w) / lam_col + 0.5 * (ww - 1.0) * w
        dlam = xi[..., 0] ** 2 - ww[..., 0] * np.asarray(lam)
    else:
        dw = xi * (x - xi * w) / lam_col
        dlam = xi[..., 0] ** 2 - np.asarray(lam)
    return dw, dlam


def pca_online_rhs(kind: PcaRule, x, s: PcaState) -> PcaState:
    """Sample-driven field whose expectation over x ~ (0, C) is pca_rhs.

    With the activity ``xi = w'x``:

    L2:        w' = lam^-1 xi (x - xi w) + (w'w - 1)/2 * w,  lam' = xi^2 - w'w lam
    L2_ALA:    w' = lam^-1 xi (x - xi w),                    lam' = xi^2 - lam
    SUM_MOD:   w' = lam^-1 xi (x - (1'x) w),                 lam' = (1'x) xi - lam
    SUM_EXACT: same w', lam' = xi^2 / w'w - lam
    """
    x = as_vector(x, "x")
    if x.size != s.w.size:
        raise DimensionError(f"x has dimension {x.size} but w has {s.w.size}")
    require_scalar("lambda", s.lam)
    dw, dlam = pca_online_delta(kind, x, s.w, s.lam)
    return PcaState(w=dw, lam=float(dlam))


def constraint_map_sum(w_tilde) -> np.ndarray:
    """Rescale a unit vector onto the constant-sum plane: w = w~ / (1'w~)."""
    w_tilde = as_vector(w_tilde, "w_tilde")
    total = float(w_tilde.sum())
    if abs(total) <= 1e-8:
        raise ConstraintDegeneracyError(
            f"vector is parallel to the constant-sum plane (1'w = {total:.3e})"
        )
    return w_tilde / total


def stationary_pca_state(kind: PcaRule, spectrum: Spectrum, index: int, sign: float = 1.0) -> PcaState:
    """Constrained stationary state for the ``index``-th eigenpair (1-based)."""
    vec = spectrum.vectors[:, index - 1]
    lam = float(spectrum.values[index - 1])
    if kind.is_sum:
        return PcaState(w=constraint_map_sum(vec), lam=lam)
    return PcaState(w=sign * vec, lam=lam)


def initial_pca_state(n: int, seed: int, C=None, noise: float = 0.1) -> PcaState:
    """Default start: w = 1/n plus seeded noise, lam = w'Cw (or 1 online).

    When C is given (averaged runs) lam starts at the current Rayleigh
    numerator w'Cw; online runs pass C=None and start at lam = 1. The noise is
    projected onto the constant-sum plane so starts satisfy 1'w = 1 exactly,
    which suits the SUM kinds and is harmless for the L2 kinds.
    """
    rng = SplitMix64(seed)
    g = rng.normal(n)
    g = g - g.mean()
    w = np.full(n, 1.0 / n) + noise * g
    if C is not None:
        C = check_symmetric(C)
        lam = float(w @ C @ w)
    else:
        lam = 1.0
    return PcaState(w=w, lam=lam)


def pca_field(kind: PcaRule, C) -> Callable[[np.ndarray], np.ndarray]:
    """Averaged field over flat state arrays, for integrators and Jacobians."""
    C = as_matrix(C, "C")

    def field(z: np.ndarray) -> np.ndarray:
        return pca_rhs(kind, C, PcaState.from_array(z)).to_array()

    return field


def pca_residual_fn(kind: PcaRule, C) -> Callable[[np.ndarray], np.ndarray]:
    """Residual over flat state arrays, for the generic Newton machinery."""
    C = as_matrix(C, "C")

    def fn(z: np.ndarray) -> np.ndarray:
        return pca_residual(kind, C, PcaState.from_array(z))

    return fn
