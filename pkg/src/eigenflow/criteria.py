"""Scalar criteria, derivative kernels, and the generic Newton zero-finder.

The information criteria here are stationary exactly at the principal
eigenpair or singular triple and serve as cross-checks on the learning rules,
not as objectives to descend. The derivative kernels (Rayleigh-quotient
gradient, unit-vector scalar-product gradient) are the closed forms the rule
derivations rest on; each is validated against central differences in the
test suite. ``newton_zero_field`` is the fully numeric reference field
``z' = -J(z)^-1 f(z)`` the closed-form rules are compared to.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable

import numpy as np

from .errors import SingularJacobianError
from .linalg import as_vector, check_symmetric, fd_jacobian, gen_eig
from .rules_pca import PcaState
from .rules_svd import SvdState


class Criterion(Enum):
    P_PCA1 = "p_pca1"
    P_PCA2 = "p_pca2"
    P_SVD1 = "p_svd1"


def eval_criterion(kind: Criterion, matrix, state) -> float:
    """Evaluate an information criterion at a PCA or SVD state.

    P_PCA1: w'Cw/lam - w'w + ln(lam)
    P_PCA2: w'Cw - (w'w) lam + lam
    P_SVD1: u'Av/sigma - u'u/2 - v'v/2 + ln(sigma)

    Logarithmic kinds require a positive scalar estimate.
    """
    if kind in (Criterion.P_PCA1, Criterion.P_PCA2):
        if not isinstance(state, PcaState):
            raise TypeError(f"{kind.value} expects a PcaState")
        C = check_symmetric(matrix)
        w, lam = state.w, state.lam
        wCw = float(w @ C @ w)
        ww = float(w @ w)
        if kind is Criterion.P_PCA1:
            if lam <= 0:
                raise ValueError("P_PCA1 requires lambda > 0")
            return wCw / lam - ww + float(np.log(lam))
        return wCw - ww * lam + lam
    if not isinstance(state, SvdState):
        raise TypeError(f"{kind.value} expects an SvdState")
    A = np.asarray(matrix, dtype=float)
    u, v, sigma = state.u, state.v, state.sigma
    if sigma <= 0:
        raise ValueError("P_SVD1 requires sigma > 0")
    uAv = float(u @ A @ v)
    return uAv / sigma - 0.5 * float(u @ u) - 0.5 * float(v @ v) + float(np.log(sigma))


def rayleigh_quotient(C, w) -> float:
    """Plain Rayleigh quotient w'Cw / w'w (the variance objective is half of it)."""
    w = as_vector(w, "w")
    if float(w @ w) == 0.0:
        raise ValueError("Rayleigh quotient undefined at the zero vector")
    C = np.asarray(C, dtype=float)
    return float(w @ C @ w) / float(w @ w)


def rayleigh_gradient(C, w) -> np.ndarray:
    """Gradient of the Rayleigh quotient for symmetric C.

    (2 / w'w) (Cw - w * (w'Cw / w'w)); orthogonal to w, zero at eigenvectors.
    """
    C = check_symmetric(C)
    w = as_vector(w, "w")
    ww = float(w @ w)
    if ww == 0.0:
        raise ValueError("gradient undefined at the zero vector")
    Cw = C @ w
    return (2.0 / ww) * (Cw - w * (float(w @ Cw) / ww))


def unit_scalar_gradient(a, x) -> np.ndarray:
    """Gradient of x -> a'x/||x||: (a ||x|| - (a'x) x/||x||) / x'x.

    Orthogonal to x; zero exactly when a is parallel to x.
    """
    a = as_vector(a, "a")
    x = as_vector(x, "x")
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise ValueError("gradient undefined at the zero vector")
    return (a * nx - float(a @ x) * x / nx) / float(x @ x)


def newton_zero_field(f: Callable[[np.ndarray], np.ndarray], z, h: float | None = None) -> np.ndarray:
    """Numeric Newton zero-finder field -J(z)^-1 f(z).

    J comes from central differences and is inverted by a dense
    partial-pivot solve without regularization; an ill-conditioned Jacobian
    (condition number >= 1e12) raises so derivation mistakes surface instead
    of being masked.
    """
    z = as_vector(z, "z")
    J = fd_jacobian(f, z, h=h)
    cond = float(np.linalg.cond(J))
    if not np.isfinite(cond) or cond >= 1e12:
        raise SingularJacobianError(cond)
    return -np.linalg.solve(J, np.asarray(f(z), dtype=float))


def lagrange_hessian(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Bordered Hessian [[I_n, 1], [1', 0]] and its eigenvalues.

    The single negative eigenvalue is the saddle signature of the
    constant-sum Lagrange system.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = np.eye(n)
    H[:n, n] = 1.0
    H[n, :n] = 1.0
    return H, gen_eig(H)
