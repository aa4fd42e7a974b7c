"""Integrators, seeded samplers, and the online trainer.

Integration is explicit fixed-step only (euler or classic rk4) so trajectories
reproduce bit-for-bit per (seed, dt). Online training applies the sample field
as a plain forward update ``z <- z + gamma_t * field(sample, z)`` under a
constant or inverse-time rate schedule. Both record thinned trajectories with
residual norms, constraint values, and the angle to the oracle direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import SCALAR_FLOOR, DivergenceError, GuardedScalarError
from .linalg import as_matrix, sym_eig
from .rng import SplitMix64
from .rules_pca import PcaRule, pca_online_delta
from .rules_svd import SvdRule, UnsupportedRuleError, svd_online_delta

DIVERGENCE_NORM = 1e12

# A probe maps the flat state to (residual_norm, constraint_u, constraint_v,
# angle_to_oracle). Runs without an oracle record zeros.
Probe = Callable[[np.ndarray], tuple[float, float, float, float]]


@dataclass
class Trajectory:
    """Thinned record of an integration or training run."""

    state_labels: list[str]
    steps: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    constraint_u: list[float] = field(default_factory=list)
    constraint_v: list[float] = field(default_factory=list)
    angles: list[float] = field(default_factory=list)

    def append(self, step: int, t: float, z: np.ndarray, probe: Probe | None) -> None:
        if self.steps and step <= self.steps[-1]:
            return
        res, cu, cv, ang = probe(z) if probe is not None else (0.0, 0.0, 0.0, 0.0)
        values = [t, res, cu, cv, ang] + list(z)
        if not all(np.isfinite(values)):
            raise DivergenceError(step, float(np.linalg.norm(z)))
        self.steps.append(step)
        self.times.append(float(t))
        self.states.append(np.asarray(z, dtype=float).copy())
        self.residuals.append(float(res))
        self.constraint_u.append(float(cu))
        self.constraint_v.append(float(cv))
        self.angles.append(float(ang))

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.steps)

    def write_csv(self, path) -> None:
        """Schema: step,t,<state components...>,residual,constraint_u,constraint_v,angle."""
        header = ["step", "t", *self.state_labels, "residual", "constraint_u", "constraint_v", "angle"]
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for i, step in enumerate(self.steps):
                row = [str(step)] + [
                    format(v, ".17g")
                    for v in (self.times[i], *self.states[i], self.residuals[i],
                              self.constraint_u[i], self.constraint_v[i], self.angles[i])
                ]
                fh.write(",".join(row) + "\n")


@dataclass(frozen=True)
class RateSchedule:
    """Learning-rate schedule: constant or inverse-time gamma0*t0/(t0+t)."""

    kind: str = "inverse-time"
    gamma0: float = 0.05
    t0: float = 100.0

    def __post_init__(self):
        if self.kind not in ("constant", "inverse-time"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.gamma0 > 0:
            raise ValueError("gamma0 must be positive")
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")

    def rate(self, t: float) -> float:
        if self.kind == "constant":
            return self.gamma0
        return self.gamma0 * self.t0 / (self.t0 + t)

    def rates(self, steps: int) -> np.ndarray:
        return np.array([self.rate(t) for t in range(steps)])


def _check_state_norm(z: np.ndarray, step: int) -> None:
    norm = float(np.linalg.norm(z))
    if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
        raise DivergenceError(step, norm)


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    z0,
    dt: float,
    steps: int,
    method: str = "rk4",
    record_every: int = 1,
    probe: Probe | None = None,
    state_labels: Sequence[str] | None = None,
    stop_when: Callable[[np.ndarray], bool] | None = None,
) -> Trajectory:
    """Fixed-step explicit integration of ``z' = rhs(z)``.

    Records the initial state, every ``record_every``-th step, and the final
    step. Aborts with diagnostics when the state norm exceeds the divergence
    threshold; guarded-scalar errors from the field propagate unchanged.
    ``stop_when`` ends the run early once it returns True at a recorded step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if method not in ("euler", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    z = np.array(z0, dtype=float)
    labels = list(state_labels) if state_labels is not None else [f"z{i}" for i in range(z.size)]
    traj = Trajectory(state_labels=labels)
    traj.append(0, 0.0, z, probe)
    if stop_when is not None and stop_when(z):
        return traj
    for step in range(1, steps + 1):
        if method == "euler":
            z = z + dt * rhs(z)
        else:
            k1 = rhs(z)
            k2 = rhs(z + 0.5 * dt * k1)
            k3 = rhs(z + 0.5 * dt * k2)
            k4 = rhs(z + dt * k3)
            z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_state_norm(z, step)
        recorded = step % record_every == 0 or step == steps
        if recorded:
            traj.append(step, step * dt, z, probe)
        if stop_when is not None and stop_when(z):
            if not recorded:
                traj.append(step, step * dt, z, probe)
            break
    return traj


def sample_gaussian(C, seed: int, count: int) -> np.ndarray:
    """``count`` zero-mean Gaussian vectors with covariance C, one per row.

    Uses the factor L = W diag(sqrt(lambda)) from the eigen oracle, x = L g.
    """
    spec = sym_eig(C)
    if np.any(spec.values <= 0):
        raise ValueError("covariance must be symmetric positive definite")
    L = spec.vectors * np.sqrt(spec.values)
    g = SplitMix64(seed).normal_matrix(count, spec.values.size)
    return g @ L.T


def sample_pairs(A, seed: int, count: int, noise: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """``count`` vector pairs (y, x) with E{yx'} = A.

    x is standard normal; y = A x + noise * g with independent g. Returns
    (ys, xs) arrays of shape (count, m) and (count, n).
    """
    A = as_matrix(A, "A")
    if noise < 0:
        raise ValueError("noise must be >= 0")
    m, n = A.shape
    rng = SplitMix64(seed)
    xs = rng.normal_matrix(count, n)
    ys = xs @ A.T
    if noise > 0:
        ys = ys + noise * rng.normal_matrix(count, m)
    return ys, xs


def train_online(
    online_rhs: Callable[[object, np.ndarray], np.ndarray],
    samples: Iterable,
    z0,
    schedule: RateSchedule,
    steps: int,
    record_every: int = 1,
    probe: Probe | None = None,
    state_labels: Sequence[str] | None = None,
) -> Trajectory:
    """Online training: ``z <- z + gamma_t * online_rhs(sample_t, z)``.

    ``samples`` must yield at least ``steps`` items. Divergence and
    guarded-scalar failures surface to the caller; there is no restart policy.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    z = np.array(z0, dtype=float)
    labels = list(state_labels) if state_labels is not None else [f"z{i}" for i in range(z.size)]
    traj = Trajectory(state_labels=labels)
    traj.append(0, 0.0, z, probe)
    it = iter(samples)
    for step in range(1, steps + 1):
        try:
            sample = next(it)
        except StopIteration:
            raise ValueError(f"sample stream exhausted at step {step} of {steps}") from None
        z = z + schedule.rate(step - 1) * online_rhs(sample, z)
        _check_state_norm(z, step)
        if step % record_every == 0 or step == steps:
            traj.append(step, float(step), z, probe)
    return traj


def train_pca_online_batch(
    kind: PcaRule,
    xs: np.ndarray,
    w0: np.ndarray,
    lam0: np.ndarray,
    schedule: RateSchedule,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized online PCA over independent streams.

    ``xs`` has shape (steps, batch, n); ``w0`` is (batch, n), ``lam0`` is
    (batch,). Applies the same update as train_online to every stream in
    lockstep and returns the final (w, lam). Scalar floors are checked in
    bulk: any stream hitting the floor raises.
    """
    w = np.array(w0, dtype=float)
    lam = np.array(lam0, dtype=float)
    steps = xs.shape[0]
    rates = schedule.rates(steps)
    for t in range(steps):
        if np.any(lam <= SCALAR_FLOOR):
            raise GuardedScalarError("lambda", float(np.min(lam)))
        dw, dlam = pca_online_delta(kind, xs[t], w, lam)
        w = w + rates[t] * dw
        lam = lam + rates[t] * dlam
        if not np.all(np.isfinite(w)):
            raise DivergenceError(t + 1, float(np.max(np.abs(w))))
    return w, lam


def train_svd_online_batch(
    kind: SvdRule,
    ys: np.ndarray,
    xs: np.ndarray,
    u0: np.ndarray,
    v0: np.ndarray,
    sigma0: np.ndarray,
    rho0: np.ndarray | None,
    schedule: RateSchedule,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray | None]:
    """Vectorized online SVD over independent streams; see train_pca_online_batch."""
    if kind is SvdRule.SUM_FULL:
        raise UnsupportedRuleError("sum_full has no online form")
    u = np.array(u0, dtype=float)
    v = np.array(v0, dtype=float)
    sigma = np.array(sigma0, dtype=float)
    rho = None if rho0 is None else np.array(rho0, dtype=float)
    steps = ys.shape[0]
    rates = schedule.rates(steps)
    for t in range(steps):
        if np.any(sigma <= SCALAR_FLOOR):
            raise GuardedScalarError("sigma", float(np.min(sigma)))
        if rho is not None and np.any(rho <= SCALAR_FLOOR):
            raise GuardedScalarError("rho", float(np.min(rho)))
        du, dv, dsigma, drho = svd_online_delta(kind, ys[t], xs[t], u, v, sigma, rho)
        u = u + rates[t] * du
        v = v + rates[t] * dv
        sigma = sigma + rates[t] * dsigma
        if drho is not None:
            rho = rho + rates[t] * drho
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise DivergenceError(t + 1, float(np.max(np.abs(u))))
    return u, v, sigma, rho
