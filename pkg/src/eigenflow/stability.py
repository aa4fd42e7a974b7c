"""Stationary-point stability analysis of the constant-sum SVD system.

For each singular triple the analysis builds the exact constrained stationary
quadruple from the SVD oracle, polishes it with a few Newton steps on the
residual, and then compares two routes to the local spectrum:

* predicted: the closed-form eigenvalue formulas of the transformed Jacobian
  (multiplicity m+2-n at -1; a pair -1 +/- (mu_1/mu) sqrt((1 - |u|/|u_1|)
  (1 - |v|/|v_1|)); pairs -1 +/- mu_j/mu for j = 2..n);
* numeric: general eigenvalues of the central-difference Jacobian of the
  modified constant-sum field at the same point.

Classification (attractor / saddle / non-hyperbolic) always follows the
numeric route. The closed form is exact at the principal quadruple; at
non-principal triples the numeric route is authoritative and the report keeps
both sides plus their matching distance so discrepancies stay visible. The
data-dependent flag marks the second triple, where the closed form's radical
admits no data-independent stability judgment.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import ConstraintDegeneracyError, OrientationError, StationarityError
from .linalg import SvdFactors, as_matrix, fd_jacobian, gen_eig, svd_factor
from .criteria import newton_zero_field
from .rules_svd import SvdRule, SvdState, stationary_svd_state, svd_field, svd_residual_fn

CLASSIFY_TOL = 1e-6


@dataclass(frozen=True)
class StabilityReport:
    triple_index: int
    state: SvdState
    predicted: np.ndarray
    numeric: np.ndarray
    classification: str
    predicted_classification: str
    data_dependent: bool
    match_distance: float

    def to_json_dict(self) -> dict:
        return {
            "triple_index": self.triple_index,
            "state": {
                "u": list(self.state.u),
                "v": list(self.state.v),
                "sigma": self.state.sigma,
                "rho": self.state.rho,
            },
            "predicted": [[z.real, z.imag] for z in self.predicted],
            "numeric": [[z.real, z.imag] for z in self.numeric],
            "classification": self.classification,
            "predicted_classification": self.predicted_classification,
            "data_dependent": self.data_dependent,
            "match_distance": self.match_distance,
        }


def polish_stationary(A, state: SvdState, steps: int = 5) -> SvdState:
    """Newton-polish an oracle-derived quadruple to push the residual to ~1e-12."""
    A = as_matrix(A, "A")
    m, n = A.shape
    f = svd_residual_fn(SvdRule.SUM_MOD, A)
    z = state.to_array()
    for _ in range(steps):
        z = z + newton_zero_field(f, z)
    return SvdState.from_array(z, m, n, with_rho=True)


def analytic_jacobian_at_stationary(A, state: SvdState) -> np.ndarray:
    """Exact Jacobian of the modified constant-sum field at a stationary point.

    Blocks: [[-I_m, sigma^-1 (A - u 1'A), 0, 0],
             [rho^-1 (A' - v 1'A'), -I_n, 0, 0],
             [0', 1'A, -1, 0],
             [1'A', 0', 0, -1]].

    The input must satisfy the six stationarity equations within 1e-8; a
    violation raises naming the offending equation.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    u, v, sigma, rho = state.u, state.v, state.sigma, state.rho
    if rho is None:
        raise ValueError("stationary analysis needs a constant-sum state with rho")
    Av = A @ v
    Atu = A.T @ u
    checks = [
        ("Av = sigma*u", float(np.max(np.abs(Av - sigma * u)))),
        ("A'u = rho*v", float(np.max(np.abs(Atu - rho * v)))),
        ("sigma = 1'Av", abs(float(Av.sum()) - sigma)),
        ("rho = 1'A'u", abs(float(Atu.sum()) - rho)),
        ("1'u = 1", abs(float(u.sum()) - 1.0)),
        ("1'v = 1", abs(float(v.sum()) - 1.0)),
    ]
    for name, residual in checks:
        if residual > 1e-8:
            raise StationarityError(name, residual)
    colsum_A = A.sum(axis=0)
    colsum_At = A.sum(axis=1)
    J = np.zeros((m + n + 2, m + n + 2))
    J[:m, :m] = -np.eye(m)
    J[:m, m : m + n] = (A - np.outer(u, colsum_A)) / sigma
    J[m : m + n, :m] = (A.T - np.outer(v, colsum_At)) / rho
    J[m : m + n, m : m + n] = -np.eye(n)
    J[m + n, m : m + n] = colsum_A
    J[m + n, m + n] = -1.0
    J[m + n + 1, :m] = colsum_At
    J[m + n + 1, m + n + 1] = -1.0
    return J


def _sum_norms(factors: SvdFactors, index: int) -> tuple[float, float]:
    s_i = float(factors.left.vectors[:, index - 1].sum())
    r_i = float(factors.right.vectors[:, index - 1].sum())
    if abs(s_i) <= 1e-8 or abs(r_i) <= 1e-8:
        raise ConstraintDegeneracyError(
            f"triple {index} is (near-)parallel to the constant-sum plane"
        )
    return 1.0 / abs(s_i), 1.0 / abs(r_i)


def eq2_radicand(A, index: int, factors: SvdFactors | None = None) -> float:
    """(1 - |u_i|/|u_1|)(1 - |v_i|/|v_1|) in constant-sum norms for triple i."""
    if factors is None:
        factors = svd_factor(as_matrix(A, "A"))
    nu1, nv1 = _sum_norms(factors, 1)
    nui, nvi = _sum_norms(factors, index)
    return (1.0 - nui / nu1) * (1.0 - nvi / nv1)


def predicted_spectrum(A, index: int, factors: SvdFactors | None = None) -> np.ndarray:
    """Closed-form eigenvalue multiset at the ``index``-th stationary quadruple.

    Requires min(m, n) = n (transpose A and swap roles otherwise) and all n
    singular values nonzero with both constant-sum projections nonzero.
    Returns m+n+2 complex values: -1 with multiplicity m+2-n, the radical
    pair, and -1 +/- mu_j/mu for j = 2..n.
    """
    A = as_matrix(A, "A")
    m, n = A.shape
    if m < n:
        raise OrientationError(f"analysis assumes min(m, n) = n, got {m} x {n}")
    if factors is None:
        factors = svd_factor(A)
    sing = factors.singulars
    if sing.size < n or np.any(sing[:n] <= 1e-12 * max(1.0, float(sing[0]))):
        raise ValueError("analysis requires n nonzero singular values")
    if not 1 <= index <= n:
        raise ValueError(f"triple index {index} out of range 1..{n}")
    mu = float(sing[index - 1])
    mu1 = float(sing[0])
    radicand = eq2_radicand(A, index, factors)
    root = cmath.sqrt(radicand)
    values = [-1.0 + 0j] * (m + 2 - n)
    values.append(-1.0 + (mu1 / mu) * root)
    values.append(-1.0 - (mu1 / mu) * root)
    for j in range(2, n + 1):
        ratio = float(sing[j - 1]) / mu
        values.append(complex(-1.0 + ratio))
        values.append(complex(-1.0 - ratio))
    arr = np.array(values, dtype=complex)
    order = np.lexsort((-arr.imag, -arr.real))
    return arr[order]


def classify(numeric: np.ndarray, triple_index: int | None = None) -> tuple[str, bool]:
    """Classify a stationary point from numeric Jacobian eigenvalues.

    Attractor when all real parts are below -1e-6; saddle when any exceeds
    +1e-6; non-hyperbolic when the largest real part sits within 1e-6 of
    zero. The data-dependent flag is set for the second triple, whose
    closed-form radical pair admits no data-independent sign.
    """
    largest = float(np.max(np.asarray(numeric).real))
    if largest < -CLASSIFY_TOL:
        label = "attractor"
    elif largest > CLASSIFY_TOL:
        label = "saddle"
    else:
        label = "non-hyperbolic"
    return label, triple_index == 2


def numeric_spectrum(A, state: SvdState) -> np.ndarray:
    """Eigenvalues of the central-difference Jacobian of the modified field."""
    field = svd_field(SvdRule.SUM_MOD, as_matrix(A, "A"))
    return gen_eig(fd_jacobian(field, state.to_array()))


def match_spectra(predicted: np.ndarray, numeric: np.ndarray) -> float:
    """Greedy nearest-pair matching distance between equal-size multisets."""
    pred = list(np.asarray(predicted, dtype=complex))
    num = list(np.asarray(numeric, dtype=complex))
    if len(pred) != len(num):
        raise ValueError("spectra have different cardinality")
    worst = 0.0
    while pred:
        best = None
        for i, p in enumerate(pred):
            for j, q in enumerate(num):
                d = abs(p - q)
                if best is None or d < best[0]:
                    best = (d, i, j)
        worst = max(worst, best[0])
        pred.pop(best[1])
        num.pop(best[2])
    return worst


def analyze_triple(A, index: int, polish_steps: int = 5) -> StabilityReport:
    """Full report for one triple: stationary state, both spectra, classes."""
    A = as_matrix(A, "A")
    factors = svd_factor(A)
    state = stationary_svd_state(SvdRule.SUM_MOD, A, factors, index)
    state = polish_stationary(A, state, steps=polish_steps)
    predicted = predicted_spectrum(A, index, factors)
    numeric = numeric_spectrum(A, state)
    classification, _ = classify(numeric, index)
    predicted_classification, data_dependent = classify(predicted, index)
    return StabilityReport(
        triple_index=index,
        state=state,
        predicted=predicted,
        numeric=numeric,
        classification=classification,
        predicted_classification=predicted_classification,
        data_dependent=data_dependent,
        match_distance=match_spectra(predicted, numeric),
    )


def stability_reports(A, polish_steps: int = 5) -> list[StabilityReport]:
    """Reports for every triple i = 1..n of an m x n matrix with m >= n."""
    A = as_matrix(A, "A")
    return [analyze_triple(A, i, polish_steps=polish_steps) for i in range(1, A.shape[1] + 1)]
