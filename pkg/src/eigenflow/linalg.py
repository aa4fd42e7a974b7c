"""Dense linear algebra used throughout the package.

Vectors and matrices are plain float64 ndarrays (row-major). This module
provides the eigen/SVD oracles the learning rules are checked against, a
general (possibly complex) eigenvalue solver for Jacobians, central-difference
derivative kernels, seeded test-matrix generators, and CSV serialization.

Factorizations are backed by LAPACK via numpy; the contracts on top (sorting,
sign convention, residual tolerances, determinism per seed) are what the rest
of the package and the test suite rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, SymmetryError
from .rng import SplitMix64, derive_seed

MAX_GEN_EIG_DIM = 64


def as_vector(x, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def as_matrix(x, name: str = "M") -> np.ndarray:
    m = np.asarray(x, dtype=float)
    if m.ndim != 2 or m.size < 1:
        raise DimensionError(f"{name} must be a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def check_symmetric(C: np.ndarray, tol: float = 1e-10, name: str = "C") -> np.ndarray:
    C = as_matrix(C, name)
    if C.shape[0] != C.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {C.shape}")
    scale = max(1.0, float(np.abs(C).max()))
    if float(np.abs(C - C.T).max()) > tol * scale:
        raise SymmetryError(f"{name} is not symmetric within {tol:g} relative")
    return C


def _flip_needed(v: np.ndarray) -> bool:
    """True when the first non-negligible component of ``v`` is negative.

    Components below 1e-12 of the max magnitude do not count as the pivot, so
    the convention is stable under roundoff in near-zero entries.
    """
    mags = np.abs(v)
    top = mags.max()
    if top == 0.0:
        return False
    pivot = int(np.argmax(mags > 1e-12 * top))
    return bool(v[pivot] < 0)


def _sign_fix(v: np.ndarray) -> np.ndarray:
    return -v if _flip_needed(v) else v


@dataclass(frozen=True)
class Spectrum:
    """Eigen- or singular decomposition factor: values with orthonormal columns.

    ``values`` are sorted descending by absolute value; ``vectors[:, i]``
    is the unit vector paired with ``values[i]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vecs = np.asarray(self.vectors, dtype=float)
        if vecs.ndim != 2 or vals.ndim != 1 or vecs.shape[1] != vals.size:
            raise DimensionError("spectrum values/vectors shapes disagree")
        gram = vecs.T @ vecs
        if float(np.abs(gram - np.eye(vals.size)).max()) > 1e-10:
            raise ValueError("spectrum vectors are not orthonormal within 1e-10")
        if np.any(np.diff(np.abs(vals)) > 1e-12 * max(1.0, float(np.abs(vals).max()))):
            raise ValueError("spectrum values not sorted descending by magnitude")
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "vectors", vecs)


class SvdFactors(NamedTuple):
    left: Spectrum
    singulars: np.ndarray
    right: Spectrum


def sym_eig(C) -> Spectrum:
    """Full eigendecomposition of a symmetric matrix.

    Values come back sorted descending by absolute value; each eigenvector is
    sign-fixed so its first non-negligible component is positive.
    """
    C = check_symmetric(C)
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(-np.abs(vals), kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    for i in range(vals.size):
        vecs[:, i] = _sign_fix(vecs[:, i])
    return Spectrum(values=vals, vectors=vecs)


def svd_factor(A) -> SvdFactors:
    """Full SVD ``A = U S V^T`` with complete orthogonal factors.

    ``left.vectors`` is m x m, ``right.vectors`` is n x n, ``singulars`` has
    min(m, n) non-negative entries sorted descending. The sign convention is
    applied to the right vectors; the paired left vectors flip jointly so that
    ``A v_i = s_i u_i`` holds with non-negative ``s_i``. Null-space columns
    are sign-fixed independently for determinism.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    U, s, Vh = np.linalg.svd(A, full_matrices=True)
    V = Vh.T
    k = s.size
    tiny = 1e-12 * max(1.0, float(s[0]) if k else 1.0)
    for i in range(k):
        if _flip_needed(V[:, i]):
            V[:, i] = -V[:, i]
            if s[i] > tiny:
                U[:, i] = -U[:, i]
        if s[i] <= tiny:
            U[:, i] = _sign_fix(U[:, i])
    for i in range(k, m):
        U[:, i] = _sign_fix(U[:, i])
    for i in range(k, n):
        V[:, i] = _sign_fix(V[:, i])
    pad_left = np.concatenate([s, np.zeros(m - k)])
    pad_right = np.concatenate([s, np.zeros(n - k)])
    return SvdFactors(
        left=Spectrum(values=pad_left, vectors=U),
        singulars=s.copy(),
        right=Spectrum(values=pad_right, vectors=V),
    )


def gen_eig(M) -> np.ndarray:
    """All eigenvalues of a general square real matrix, as complex numbers.

    Sorted by descending real part, then descending imaginary part, so equal
    multisets compare elementwise. Dimension is capped at desk scale.
    """
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"M must be square, got shape {M.shape}")
    if M.shape[0] > MAX_GEN_EIG_DIM:
        raise DimensionError(f"dimension {M.shape[0]} exceeds cap {MAX_GEN_EIG_DIM}")
    try:
        vals = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigenvalue iteration did not converge: {exc}") from exc
    order = np.lexsort((-vals.imag, -vals.real))
    return vals[order]


def default_fd_step(z: np.ndarray) -> float:
    """Central-difference step balancing truncation against roundoff."""
    return 1e-5 * (1.0 + float(np.linalg.norm(z)))


def fd_jacobian(f: Callable[[np.ndarray], np.ndarray], z, h: float | None = None) -> np.ndarray:
    """Jacobian of a vector function by central differences.

    Column j is ``(f(z + h e_j) - f(z - h e_j)) / (2h)``.
    """
    z = as_vector(z, "z")
    if h is None:
        h = default_fd_step(z)
    cols = []
    for j in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[j] += h
        zm[j] -= h
        fp = np.asarray(f(zp), dtype=float)
        fm = np.asarray(f(zm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ValueError(f"non-finite function value while differencing column {j}")
        # divide by the representable step actually taken, not the nominal 2h
        cols.append((fp - fm) / (zp[j] - zm[j]))
    return np.column_stack(cols)


def fd_gradient(g: Callable[[np.ndarray], float], z, h: float | None = None) -> np.ndarray:
    """Gradient of a scalar function by central differences."""
    z = as_vector(z, "z")
    if h is None:
        h = default_fd_step(z)
    grad = np.empty(z.size)
    for j in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[j] += h
        zm[j] -= h
        gp = float(g(zp))
        gm = float(g(zm))
        if not (np.isfinite(gp) and np.isfinite(gm)):
            raise ValueError(f"non-finite function value while differencing component {j}")
        grad[j] = (gp - gm) / (zp[j] - zm[j])
    return grad


def _check_descending_distinct(values: Sequence[float], name: str) -> np.ndarray:
    vals = as_vector(values, name)
    if np.any(vals <= 0):
        raise ValueError(f"{name} must be strictly positive")
    if np.any(np.diff(vals) >= 0):
        raise ValueError(f"{name} must be strictly descending")
    if np.any(-np.diff(vals) < 1e-6 * vals[0]):
        raise ValueError(f"{name} must have relative gaps of at least 1e-6")
    return vals


def _seeded_orthogonal(dim: int, rng: SplitMix64) -> np.ndarray:
    G = rng.normal_matrix(dim, dim)
    Q, R = np.linalg.qr(G)
    d = np.sign(np.diag(R))
    d[d == 0] = 1.0
    return Q * d


def make_spd(eigenvalues, seed: int) -> np.ndarray:
    """Seeded SPD matrix with a prescribed spectrum.

    ``C = Q' diag(eigenvalues) Q`` with Q the Q-factor of a seeded Gaussian
    matrix; deterministic per seed. Eigenvalues must be positive, strictly
    descending, with relative gaps of at least 1e-6 (degenerate spectra are
    rejected rather than guessed at).
    """
    vals = _check_descending_distinct(eigenvalues, "eigenvalues")
    n = vals.size
    Q = _seeded_orthogonal(n, SplitMix64(seed))
    C = Q.T @ np.diag(vals) @ Q
    return 0.5 * (C + C.T)


def make_cross(singulars, m: int, n: int, seed: int) -> np.ndarray:
    """Seeded m x n matrix with prescribed singular values.

    ``A = U S V^T`` from seeded orthogonal factors. The construction re-draws
    with an incremented sub-seed until the principal factors satisfy
    ``|1'u_1| > 1e-6`` and ``|1'v_1| > 1e-6`` (not parallel to the
    constant-sum plane).
    """
    if m < 1 or n < 1:
        raise DimensionError(f"m and n must be >= 1, got {m} x {n}")
    vals = _check_descending_distinct(singulars, "singulars")
    if vals.size > min(m, n):
        raise DimensionError(f"{vals.size} singular values do not fit a {m} x {n} matrix")
    S = np.zeros((m, n))
    S[: vals.size, : vals.size] = np.diag(vals)
    for attempt in range(100):
        rng = SplitMix64(derive_seed(seed, attempt))
        U = _seeded_orthogonal(m, rng)
        V = _seeded_orthogonal(n, rng)
        if abs(float(U[:, 0].sum())) > 1e-6 and abs(float(V[:, 0].sum())) > 1e-6:
            return U @ S @ V.T
    raise ConvergenceError("could not draw factors away from the constant-sum plane")


def principal_angle(a, b) -> float:
    """Sign-invariant angle between directions, arccos(|cos|), in radians."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    if denom == 0.0:
        raise ValueError("angle undefined for zero vectors")
    c = min(1.0, abs(float(a @ b)) / denom)
    return float(np.arccos(c))


def write_matrix_csv(path, M) -> None:
    """Write a matrix as CSV: first line ``rows,cols``, then one row per line."""
    M = as_matrix(M, "M")
    rows, cols = M.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{rows},{cols}\n")
        for r in range(rows):
            fh.write(",".join(format(v, ".17g") for v in M[r]) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        if len(header) != 2:
            raise ValueError(f"malformed matrix CSV header in {path}")
        rows, cols = int(header[0]), int(header[1])
        M = np.empty((rows, cols))
        for r in range(rows):
            parts = fh.readline().strip().split(",")
            if len(parts) != cols:
                raise ValueError(f"row {r} of {path} has {len(parts)} entries, expected {cols}")
            M[r] = [float(p) for p in parts]
    return M
