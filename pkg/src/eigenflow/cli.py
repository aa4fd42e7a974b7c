"""Configuration-driven experiment runner.

Subcommands: ``run`` executes one experiment described by a JSON config and
writes its artifacts into an output directory; ``validate`` parses and checks
a config without running; ``version`` prints the package version.

Config schema (strict; unknown keys are errors). Defaults in brackets.

    {
      "mode":    "averaged" | "online" | "stability" | "derivcheck",
      "problem": "pca" | "svd",                  [required unless derivcheck]
      "rule":    rule kind string,               [required for averaged/online]
      "seed":    integer,                        [0]
      "out":     output directory,               ["out"; --out overrides]
      "matrix": {
          "spectrum": [descending positive reals],   (generate per seed)
          "m": rows, "n": cols,                      [len(spectrum); svd only]
          "csv": "path"                              (read instead of generating)
      },
      "integrator": {"dt": [0.05], "steps": [10000], "method": ["rk4"],
                     "record_every": [100]},
      "schedule":   {"kind": ["inverse-time"], "gamma0": [0.05], "t0": [100.0]},
      "noise":   sample noise for svd pairs,     [0.0]
      "trials":  derivcheck repetitions          [100]
    }

Seeds derive deterministically: the matrix uses ``seed``, sample streams use
``seed + 1``, state initialization uses ``seed + 2``. Outputs are
byte-identical across repeated runs of the same config; wall time is printed
as a JSON diagnostic on stderr, never stored in artifacts.

Exit codes: 0 success, 2 divergence or numerical failure, 3 config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    ConstraintDegeneracyError,
    ConvergenceError,
    DivergenceError,
    GuardedScalarError,
    OrientationError,
    SingularJacobianError,
    StationarityError,
    UnsupportedRuleError,
)
from .criteria import (
    Criterion,
    eval_criterion,
    rayleigh_gradient,
    rayleigh_quotient,
    unit_scalar_gradient,
)
from .dynamics import RateSchedule, Trajectory, integrate, sample_gaussian, sample_pairs, train_online
from .linalg import (
    as_matrix,
    check_symmetric,
    fd_gradient,
    make_cross,
    make_spd,
    principal_angle,
    read_matrix_csv,
    svd_factor,
    sym_eig,
)
from .rng import SplitMix64
from .rules_pca import (
    PcaRule,
    PcaState,
    initial_pca_state,
    pca_online_rhs,
    pca_residual_fn,
    pca_field,
    stationary_pca_state,
)
from .rules_svd import (
    SvdRule,
    SvdState,
    initial_svd_state,
    stationary_svd_state,
    svd_field,
    svd_online_rhs,
    svd_residual_fn,
)
from .stability import stability_reports

# ConfigError is raised during parsing and maps to exit 3; everything a run
# itself can raise (guards, divergence, bad matrix data) maps to exit 2.
_RUNTIME_ERRORS = (
    DivergenceError,
    GuardedScalarError,
    SingularJacobianError,
    ConvergenceError,
    StationarityError,
    ConstraintDegeneracyError,
    OrientationError,
    UnsupportedRuleError,
    ValueError,
    np.linalg.LinAlgError,
)


@dataclass
class ExperimentConfig:
    mode: str
    problem: str | None
    rule: str | None
    seed: int
    out: str
    spectrum: list[float] | None
    m: int | None
    n: int | None
    csv: str | None
    dt: float
    steps: int
    method: str
    record_every: int
    schedule: RateSchedule
    noise: float
    trials: int
    raw: dict = field(default_factory=dict)


def _take(table: dict, context: str, allowed: dict) -> dict:
    unknown = set(table) - set(allowed)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"unknown key {name!r} in {context}")
    out = {}
    for key, default in allowed.items():
        out[key] = table.get(key, default)
    return out


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    top = _take(data, "config", {
        "mode": None, "problem": None, "rule": None, "seed": 0, "out": "out",
        "matrix": {}, "integrator": {}, "schedule": {}, "noise": 0.0, "trials": 100,
    })
    mode = top["mode"]
    if mode not in ("averaged", "online", "stability", "derivcheck"):
        raise ConfigError(f"mode must be averaged|online|stability|derivcheck, got {mode!r}")
    problem = top["problem"]
    if mode == "stability":
        problem = problem or "svd"
        if problem != "svd":
            raise ConfigError("stability mode analyzes the svd constant-sum system")
    if mode in ("averaged", "online") and problem not in ("pca", "svd"):
        raise ConfigError(f"problem must be pca|svd, got {problem!r}")

    rule = top["rule"]
    if mode in ("averaged", "online"):
        if rule is None:
            raise ConfigError(f"{mode} mode requires a rule kind")
        if problem == "pca":
            PcaRule.from_string(rule)
        else:
            kind = SvdRule.from_string(rule)
            if mode == "online" and kind is SvdRule.SUM_FULL:
                raise ConfigError("svd rule sum_full has no online form")

    if not isinstance(top["matrix"], dict):
        raise ConfigError("matrix must be an object")
    matrix = _take(top["matrix"], "matrix",
                   {"spectrum": None, "m": None, "n": None, "csv": None})
    if mode != "derivcheck":
        if (matrix["spectrum"] is None) == (matrix["csv"] is None):
            raise ConfigError("matrix needs exactly one of 'spectrum' or 'csv'")
        if matrix["csv"] is not None and not Path(matrix["csv"]).is_file():
            raise ConfigError(f"matrix csv {matrix['csv']!r} does not exist")
    if matrix["spectrum"] is not None:
        spectrum = [float(v) for v in matrix["spectrum"]]
        k = len(spectrum)
        m = int(matrix["m"]) if matrix["m"] is not None else k
        n = int(matrix["n"]) if matrix["n"] is not None else k
    else:
        spectrum, m, n = None, None, None

    if not isinstance(top["integrator"], dict):
        raise ConfigError("integrator must be an object")
    integ = _take(top["integrator"], "integrator",
                  {"dt": 0.05, "steps": 10000, "method": "rk4", "record_every": 100})
    dt = float(integ["dt"])
    steps = int(integ["steps"])
    if dt <= 0:
        raise ConfigError("integrator.dt must be positive")
    if steps <= 0:
        raise ConfigError("integrator.steps must be positive")
    if integ["method"] not in ("euler", "rk4"):
        raise ConfigError(f"integrator.method must be euler|rk4, got {integ['method']!r}")
    record_every = int(integ["record_every"])
    if record_every < 1:
        raise ConfigError("integrator.record_every must be >= 1")

    if not isinstance(top["schedule"], dict):
        raise ConfigError("schedule must be an object")
    sched = _take(top["schedule"], "schedule",
                  {"kind": "inverse-time", "gamma0": 0.05, "t0": 100.0})
    try:
        schedule = RateSchedule(kind=sched["kind"], gamma0=float(sched["gamma0"]), t0=float(sched["t0"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    noise = float(top["noise"])
    if noise < 0:
        raise ConfigError("noise must be >= 0")
    trials = int(top["trials"])
    if trials < 1:
        raise ConfigError("trials must be >= 1")

    echo = {
        "mode": mode, "problem": problem, "rule": rule, "seed": int(top["seed"]),
        "out": str(top["out"]),
        "matrix": {"spectrum": spectrum, "m": m, "n": n, "csv": matrix["csv"]},
        "integrator": {"dt": dt, "steps": steps, "method": integ["method"],
                       "record_every": record_every},
        "schedule": {"kind": schedule.kind, "gamma0": schedule.gamma0, "t0": schedule.t0},
        "noise": noise, "trials": trials,
    }
    return ExperimentConfig(
        mode=mode, problem=problem, rule=rule, seed=int(top["seed"]), out=str(top["out"]),
        spectrum=spectrum, m=m, n=n, csv=matrix["csv"],
        dt=dt, steps=steps, method=integ["method"], record_every=record_every,
        schedule=schedule, noise=noise, trials=trials, raw=echo,
    )


def parse_config(path) -> ExperimentConfig:
    """Parse and strictly validate a JSON experiment config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path!r}: {exc}") from exc
    return config_from_dict(data)


def _build_pca_matrix(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.csv is not None:
        return check_symmetric(read_matrix_csv(cfg.csv))
    return make_spd(cfg.spectrum, cfg.seed)


def _build_svd_matrix(cfg: ExperimentConfig) -> np.ndarray:
    if cfg.csv is not None:
        return as_matrix(read_matrix_csv(cfg.csv), "A")
    return make_cross(cfg.spectrum, cfg.m, cfg.n, cfg.seed)


def _pca_probe(kind: PcaRule, C: np.ndarray):
    spec = sym_eig(C)
    reference = spec.vectors[:, 0]
    residual = pca_residual_fn(kind, C)

    def probe(z: np.ndarray):
        w = z[:-1]
        res = float(np.linalg.norm(residual(z)))
        if kind.is_sum:
            cu = float(w.sum() - 1.0)
        else:
            cu = 0.5 * (float(w @ w) - 1.0)
        return res, cu, 0.0, principal_angle(w, reference)

    return probe, spec


def _svd_probe(kind: SvdRule, A: np.ndarray):
    factors = svd_factor(A)
    u_ref = factors.left.vectors[:, 0]
    v_ref = factors.right.vectors[:, 0]
    residual = svd_residual_fn(kind, A)
    m, n = A.shape

    def probe(z: np.ndarray):
        u = z[:m]
        v = z[m : m + n]
        res = float(np.linalg.norm(residual(z)))
        if kind.is_sum:
            cu = float(u.sum() - 1.0)
            cv = float(v.sum() - 1.0)
        else:
            cu = 0.5 * (float(u @ u) - 1.0)
            cv = 0.5 * (float(v @ v) - 1.0)
        angle = max(principal_angle(u, u_ref), principal_angle(v, v_ref))
        return res, cu, cv, angle

    return probe, factors


def _pca_labels(n: int) -> list[str]:
    return [f"w{i}" for i in range(n)] + ["lambda"]


def _svd_labels(m: int, n: int, with_rho: bool) -> list[str]:
    labels = [f"u{i}" for i in range(m)] + [f"v{i}" for i in range(n)] + ["sigma"]
    return labels + ["rho"] if with_rho else labels


def _summarize(cfg: ExperimentConfig, traj: Trajectory, state_names: list[str]) -> dict:
    final = traj.final_state
    return {
        "config": cfg.raw,
        "steps_run": traj.steps[-1],
        "final_state": {name: float(val) for name, val in zip(state_names, final)},
        "final_residual": traj.residuals[-1],
        "final_constraint_u": traj.constraint_u[-1],
        "final_constraint_v": traj.constraint_v[-1],
        "angle_to_oracle": traj.angles[-1],
    }


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="ascii")


def _run_trajectory_mode(cfg: ExperimentConfig, out_dir: Path) -> None:
    if cfg.problem == "pca":
        kind = PcaRule.from_string(cfg.rule)
        C = _build_pca_matrix(cfg)
        n = C.shape[0]
        probe, _ = _pca_probe(kind, C)
        labels = _pca_labels(n)
        if cfg.mode == "averaged":
            z0 = initial_pca_state(n, cfg.seed + 2, C=C).to_array()
            traj = integrate(pca_field(kind, C), z0, cfg.dt, cfg.steps,
                             method=cfg.method, record_every=cfg.record_every,
                             probe=probe, state_labels=labels)
        else:
            z0 = initial_pca_state(n, cfg.seed + 2).to_array()
            xs = sample_gaussian(C, cfg.seed + 1, cfg.steps)

            def rhs(x, z):
                return pca_online_rhs(kind, x, PcaState.from_array(z)).to_array()

            traj = train_online(rhs, xs, z0, cfg.schedule, cfg.steps,
                                record_every=cfg.record_every, probe=probe, state_labels=labels)
    else:
        kind = SvdRule.from_string(cfg.rule)
        A = _build_svd_matrix(cfg)
        m, n = A.shape
        probe, _ = _svd_probe(kind, A)
        labels = _svd_labels(m, n, kind.is_sum)
        if cfg.mode == "averaged":
            z0 = initial_svd_state(m, n, cfg.seed + 2, A=A, kind=kind).to_array()
            traj = integrate(svd_field(kind, A), z0, cfg.dt, cfg.steps,
                             method=cfg.method, record_every=cfg.record_every,
                             probe=probe, state_labels=labels)
        else:
            z0 = initial_svd_state(m, n, cfg.seed + 2, kind=kind).to_array()
            ys, xs = sample_pairs(A, cfg.seed + 1, cfg.steps, noise=cfg.noise)

            def rhs(pair, z):
                y, x = pair
                return svd_online_rhs(kind, y, x, SvdState.from_array(z, m, n, kind.is_sum)).to_array()

            traj = train_online(rhs, zip(ys, xs), z0, cfg.schedule, cfg.steps,
                                record_every=cfg.record_every, probe=probe, state_labels=labels)
    traj.write_csv(out_dir / "trajectory.csv")
    _write_json(out_dir / "summary.json", _summarize(cfg, traj, labels))


def _run_stability_mode(cfg: ExperimentConfig, out_dir: Path) -> None:
    A = _build_svd_matrix(cfg)
    if A.shape[0] < A.shape[1]:
        raise OrientationError("stability analysis requires m >= n; transpose the matrix")
    reports = stability_reports(A)
    _write_json(out_dir / "stability.json", [r.to_json_dict() for r in reports])


def _run_derivcheck_mode(cfg: ExperimentConfig, out_dir: Path) -> None:
    rng = SplitMix64(cfg.seed)
    rayleigh_err = 0.0
    scalar_err = 0.0
    for t in range(cfg.trials):
        n = 2 + t % 5
        G = rng.normal_matrix(n, n)
        C = 0.5 * (G + G.T)
        w = rng.normal(n)
        fd = fd_gradient(lambda z: rayleigh_quotient(C, z), w)
        closed = rayleigh_gradient(C, w)
        rayleigh_err = max(rayleigh_err, _rel_err(closed, fd))
        a = rng.normal(n)
        x = rng.normal(n)
        fd = fd_gradient(lambda z: float(a @ z) / float(np.linalg.norm(z)), x)
        closed = unit_scalar_gradient(a, x)
        scalar_err = max(scalar_err, _rel_err(closed, fd))

    crit_norms = {}
    for t in range(cfg.trials // 10 + 1):
        n = 2 + t % 4
        spectrum = [float(n + 2 - i) for i in range(n)]
        C = make_spd(spectrum, cfg.seed + 100 + t)
        pca_state = stationary_pca_state(PcaRule.L2, sym_eig(C), 1)
        for kind in (Criterion.P_PCA1, Criterion.P_PCA2):
            fn = _pca_criterion_fn(kind, C)
            norm = float(np.linalg.norm(fd_gradient(fn, pca_state.to_array())))
            crit_norms[kind.value] = max(crit_norms.get(kind.value, 0.0), norm)
        A = make_cross(spectrum, n + 1, n, cfg.seed + 200 + t)
        svd_state = stationary_svd_state(SvdRule.L2, A, svd_factor(A), 1)
        fn = _svd_criterion_fn(A, n + 1, n)
        norm = float(np.linalg.norm(fd_gradient(fn, svd_state.to_array())))
        crit_norms[Criterion.P_SVD1.value] = max(crit_norms.get(Criterion.P_SVD1.value, 0.0), norm)

    payload = {
        "config": cfg.raw,
        "rayleigh_gradient_max_rel_err": rayleigh_err,
        "unit_scalar_gradient_max_rel_err": scalar_err,
        "criterion_gradient_max_norm": crit_norms,
    }
    _write_json(out_dir / "derivcheck.json", payload)


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(b)), 1e-300)
    return float(np.linalg.norm(a - b)) / denom


def _pca_criterion_fn(kind: Criterion, C: np.ndarray):
    def fn(z: np.ndarray) -> float:
        return eval_criterion(kind, C, PcaState.from_array(z))

    return fn


def _svd_criterion_fn(A: np.ndarray, m: int, n: int):
    def fn(z: np.ndarray) -> float:
        return eval_criterion(Criterion.P_SVD1, A, SvdState.from_array(z, m, n, with_rho=False))

    return fn


def run(cfg: ExperimentConfig, out_dir) -> int:
    """Execute one experiment; returns the process exit code."""
    out = Path(out_dir)
    started = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.mode in ("averaged", "online"):
            _run_trajectory_mode(cfg, out)
        elif cfg.mode == "stability":
            _run_stability_mode(cfg, out)
        else:
            _run_derivcheck_mode(cfg, out)
    except _RUNTIME_ERRORS as exc:
        _diag(exc)
        return 2
    print(json.dumps({"info": "run complete", "wall_time_s": time.perf_counter() - started}),
          file=sys.stderr)
    return 0


def _diag(exc: Exception) -> None:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenflow",
        description="Run coupled eigen/singular learning-rule experiments from JSON configs.",
        epilog=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="path to JSON config")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_val = sub.add_parser("validate", help="parse and check a config without running")
    p_val.add_argument("--config", required=True, help="path to JSON config")
    sub.add_parser("version", help="print the package version")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        _diag(exc)
        return 3
    if args.command == "validate":
        print(json.dumps({"valid": True, "config": cfg.raw}, sort_keys=True))
        return 0
    return run(cfg, args.out if args.out is not None else cfg.out)


if __name__ == "__main__":
    sys.exit(main())
