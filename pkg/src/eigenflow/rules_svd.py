"""Coupled singular-triple learning rules for a cross-covariance matrix.

States couple left/right vector estimates u, v with scalar estimates. Under
the L2 constraint a single scalar sigma suffices (u and v are unit at the zero
points, where the two scalar definitions coincide); under the constant-sum
constraint the scalars sigma and rho attached to the rescaled left and right
vectors differ, and the state carries both.

Kinds: L2 is the full Euclidean-constraint system; L2_SIMPLE is its vicinity
form with the norm-correction terms dropped and sigma' = (u'Av) - sigma.
SUM_FULL keeps the coupling terms that require vector norms and the
unit-length singular value mu; SUM_MOD drops them, keeping the same
stationary points.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import SCALAR_FLOOR, DimensionError, UnsupportedRuleError, require_scalar
from .linalg import SvdFactors, as_matrix, as_vector
from .rng import SplitMix64
from .rules_pca import constraint_map_sum


class SvdRule(Enum):
    L2 = "l2"
    L2_SIMPLE = "l2_simple"
    SUM_FULL = "sum_full"
    SUM_MOD = "sum_mod"

    @property
    def is_sum(self) -> bool:
        return self in (SvdRule.SUM_FULL, SvdRule.SUM_MOD)

    @classmethod
    def from_string(cls, text: str) -> "SvdRule":
        try:
            return cls(text.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown SVD rule kind {text!r}; expected one of {valid}") from None


@dataclass(frozen=True)
class SvdState:
    """Left/right vector estimates plus scalar estimate(s).

    ``rho`` is present exactly for the constant-sum kinds. Also used for
    field values, which share the shape.
    """

    u: np.ndarray
    v: np.ndarray
    sigma: float
    rho: float | None = None

    def __post_init__(self):
        u = as_vector(self.u, "u").copy()
        v = as_vector(self.v, "v").copy()
        if u.size < 2 or v.size < 2:
            raise DimensionError("u and v must have dimension >= 2")
        if not np.isfinite(self.sigma):
            raise ValueError("sigma estimate must be finite")
        if self.rho is not None and not np.isfinite(self.rho):
            raise ValueError("rho estimate must be finite")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "rho", None if self.rho is None else float(self.rho))

    def to_array(self) -> np.ndarray:
        tail = [self.sigma] if self.rho is None else [self.sigma, self.rho]
        return np.concatenate([self.u, self.v, tail])

    @classmethod
    def from_array(cls, z, m: int, n: int, with_rho: bool) -> "SvdState":
        z = as_vector(z, "z")
        expect = m + n + (2 if with_rho else 1)
        if z.size != expect:
            raise DimensionError(f"state array has length {z.size}, expected {expect}")
        rho = float(z[m + n + 1]) if with_rho else None
        return cls(u=z[:m], v=z[m : m + n], sigma=float(z[m + n]), rho=rho)


def _check_state(kind: SvdRule, A: np.ndarray, s: SvdState) -> np.ndarray:
    A = as_matrix(A, "A")
    m, n = A.shape
    if s.u.size != m or s.v.size != n:
        raise DimensionError(
            f"A is {m}x{n} but u has dimension {s.u.size} and v has {s.v.size}"
        )
    if kind.is_sum and s.rho is None:
        raise ValueError(f"kind {kind.value} requires a rho estimate")
    if not kind.is_sum and s.rho is not None:
        raise ValueError(f"kind {kind.value} carries a single scalar; rho must be absent")
    return A


def svd_residual(kind: SvdRule, A, s: SvdState) -> np.ndarray:
    """Stacked zero-point function; zero exactly at constrained triples.

    L2 kinds:  (Av - sigma u;  A'u - sigma v;  (u'u - 1)/2); the single
    u-norm constraint suffices because ||v|| = 1 follows at the zeros.
    SUM kinds: (Av - sigma u;  A'u - rho v;  1'u - 1;  1'v - 1).
    """
    A = _check_state(kind, A, s)
    top = A @ s.v - s.sigma * s.u
    if kind.is_sum:
        mid = A.T @ s.u - s.rho * s.v
        return np.concatenate([top, mid, [s.u.sum() - 1.0, s.v.sum() - 1.0]])
    mid = A.T @ s.u - s.sigma * s.v
    return np.concatenate([top, mid, [0.5 * (float(s.u @ s.u) - 1.0)]])


def svd_rhs(kind: SvdRule, A, s: SvdState) -> SvdState:
    """Averaged field of the selected rule kind at state ``s``.

    L2:        u' = sigma^-1 (Av - (u'Av) u) + (u'u - 1)/2 * u, v' symmetric,
               sigma' = u'Av - sigma (u'u + v'v)/2
    L2_SIMPLE: norm-correction terms dropped, sigma' = u'Av - sigma
    SUM_MOD:   u' = sigma^-1 (Av - (1'Av) u), v' = rho^-1 (A'u - (1'A'u) v),
               sigma' = 1'Av - sigma, rho' = 1'A'u - rho
    SUM_FULL:  adds the mu-coupling terms to sigma'/rho', with
               mu = u'Av / (||u|| ||v||) computed in closed form
    """
    A = _check_state(kind, A, s)
    u, v = s.u, s.v
    sigma = require_scalar("sigma", s.sigma)
    Av = A @ v
    Atu = A.T @ u
    if kind.is_sum:
        rho = require_scalar("rho", s.rho)
        sAv = float(Av.sum())
        sAtu = float(Atu.sum())
        du = (Av - sAv * u) / sigma
        dv = (Atu - sAtu * v) / rho
        dsigma = sAv - sigma
        drho = sAtu - rho
        if kind is SvdRule.SUM_FULL:
            nu = require_scalar("||u||", float(np.linalg.norm(u)))
            nv = require_scalar("||v||", float(np.linalg.norm(v)))
            uAv = float(u @ Av)
            mu = uAv / (nu * nv)
            dsigma -= mu / (rho * nu * nv) * (float(v @ v) * sAtu - float(v @ Atu))
            drho -= mu / (sigma * nu * nv) * (float(u @ u) * sAv - uAv)
        return SvdState(u=du, v=dv, sigma=dsigma, rho=drho)
    uAv = float(u @ Av)
    uu = float(u @ u)
    vv = float(v @ v)
    if kind is SvdRule.L2:
        du = (Av - uAv * u) / sigma + 0.5 * (uu - 1.0) * u
        dv = (Atu - uAv * v) / sigma + 0.5 * (vv - 1.0) * v
        dsigma = uAv - 0.5 * sigma * (uu + vv)
    else:
        du = (Av - uAv * u) / sigma
        dv = (Atu - uAv * v) / sigma
        dsigma = uAv - sigma
    return SvdState(u=du, v=dv, sigma=dsigma, rho=None)


def svd_online_delta(kind: SvdRule, y, x, u, v, sigma, rho=None):
    """Single-sample field, broadcasting over leading axes.

    Returns ``(du, dv, dsigma, drho)`` (``drho`` is None for L2 kinds).
    Backs both the scalar-state API and the batched online trainer.
    """
    xi = np.sum(v * x, axis=-1, keepdims=True)
    eta = np.sum(u * y, axis=-1, keepdims=True)
    sig_col = np.asarray(sigma)[..., None]
    if kind.is_sum:
        rho_col = np.asarray(rho)[..., None]
        sy = np.sum(y, axis=-1, keepdims=True)
        sx = np.sum(x, axis=-1, keepdims=True)
        du = xi * (y - sy * u) / sig_col
        dv = eta * (x - sx * v) / rho_col
        dsigma = (sy * xi)[..., 0] - np.asarray(sigma)
        drho = (sx * eta)[..., 0] - np.asarray(rho)
        return du, dv, dsigma, drho
    if kind is SvdRule.L2:
        uu = np.sum(u * u, axis=-1, keepdims=True)
        vv = np.sum(v * v, axis=-1, keepdims=True)
        du = xi * (y - eta * u) / sig_col + 0.5 * (uu - 1.0) * u
        dv = eta * (x - xi * v) / sig_col + 0.5 * (vv - 1.0) * v
        dsigma = (eta * xi)[..., 0] - 0.5 * np.asarray(sigma) * (uu + vv)[..., 0]
    else:
        du = xi * (y - eta * u) / sig_col
        dv = eta * (x - xi * v) / sig_col
        dsigma = (eta * xi)[..., 0] - np.asarray(sigma)
    return du, dv, dsigma, None


def svd_online_rhs(kind: SvdRule, y, x, s: SvdState) -> SvdState:
    """Sample-driven field whose expectation over pairs with E{yx'} = A
    matches svd_rhs of the same kind.

    With activities ``xi = v'x`` and ``eta = u'y``:

    L2:        u' = sigma^-1 xi (y - eta u) + (u'u - 1)/2 * u, v' symmetric,
               sigma' = eta xi - sigma (u'u + v'v)/2
    L2_SIMPLE: u' = sigma^-1 xi (y - eta u), v' = sigma^-1 eta (x - xi v),
               sigma' = eta xi - sigma
    SUM_MOD:   u' = sigma^-1 xi (y - (1'y) u), v' = rho^-1 eta (x - (1'x) v),
               sigma' = (1'y) xi - sigma, rho' = (1'x) eta - rho

    SUM_FULL has no online form: its coupling terms need the unit-length
    singular value, for which no sample-driven estimate is defined here.
    """
    if kind is SvdRule.SUM_FULL:
        raise UnsupportedRuleError("sum_full has no online form")
    y = as_vector(y, "y")
    x = as_vector(x, "x")
    if y.size != s.u.size or x.size != s.v.size:
        raise DimensionError(
            f"sample dims ({y.size}, {x.size}) do not match state dims ({s.u.size}, {s.v.size})"
        )
    if kind.is_sum and s.rho is None:
        raise ValueError(f"kind {kind.value} requires a rho estimate")
    if not kind.is_sum and s.rho is not None:
        raise ValueError(f"kind {kind.value} carries a single scalar; rho must be absent")
    require_scalar("sigma", s.sigma)
    if kind.is_sum:
        require_scalar("rho", float(s.rho))
    du, dv, dsigma, drho = svd_online_delta(kind, y, x, s.u, s.v, s.sigma, s.rho)
    return SvdState(u=du, v=dv, sigma=float(dsigma), rho=None if drho is None else float(drho))


def stationary_svd_state(kind: SvdRule, A, factors: SvdFactors, index: int, sign: float = 1.0) -> SvdState:
    """Constrained stationary state for the ``index``-th singular triple (1-based).

    L2 kinds: (sign*u~, sign*v~, mu) with jointly matched signs. SUM kinds:
    the constant-sum rescalings with sigma = 1'Av and rho = 1'A'u, which the
    stationarity equations force.
    """
    A = as_matrix(A, "A")
    ut = factors.left.vectors[:, index - 1]
    vt = factors.right.vectors[:, index - 1]
    mu = float(factors.singulars[index - 1])
    if kind.is_sum:
        u = constraint_map_sum(ut)
        v = constraint_map_sum(vt)
        return SvdState(u=u, v=v, sigma=float((A @ v).sum()), rho=float((A.T @ u).sum()))
    return SvdState(u=sign * ut, v=sign * vt, sigma=mu, rho=None)


def initial_svd_state(m: int, n: int, seed: int, A=None, kind: SvdRule = SvdRule.L2, noise: float = 0.1) -> SvdState:
    """Default start: u = 1/m, v = 1/n plus seeded noise.

    Scalars start at max(u'Av, floor) when A is available (averaged runs) and
    at 1 otherwise (online runs). Noise is projected onto the constant-sum
    planes, as for the PCA initializer.
    """
    rng = SplitMix64(seed)
    gu = rng.normal(m)
    gv = rng.normal(n)
    gu -= gu.mean()
    gv -= gv.mean()
    u = np.full(m, 1.0 / m) + noise * gu
    v = np.full(n, 1.0 / n) + noise * gv
    if A is not None:
        A = as_matrix(A, "A")
        # A start with u'Av at the floor is outside the rules' basin; the
        # first field evaluation then fails loudly with the guarded error.
        scale = max(float(u @ A @ v), SCALAR_FLOOR)
    else:
        scale = 1.0
    return SvdState(u=u, v=v, sigma=scale, rho=scale if kind.is_sum else None)


def svd_field(kind: SvdRule, A) -> Callable[[np.ndarray], np.ndarray]:
    """Averaged field over flat state arrays, for integrators and Jacobians."""
    A = as_matrix(A, "A")
    m, n = A.shape
    with_rho = kind.is_sum

    def field(z: np.ndarray) -> np.ndarray:
        return svd_rhs(kind, A, SvdState.from_array(z, m, n, with_rho)).to_array()

    return field


def svd_residual_fn(kind: SvdRule, A) -> Callable[[np.ndarray], np.ndarray]:
    """Residual over flat state arrays, for the generic Newton machinery."""
    A = as_matrix(A, "A")
    m, n = A.shape
    with_rho = kind.is_sum

    def fn(z: np.ndarray) -> np.ndarray:
        return svd_residual(kind, A, SvdState.from_array(z, m, n, with_rho))

    return fn
