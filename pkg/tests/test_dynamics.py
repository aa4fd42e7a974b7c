import numpy as np
import pytest

from eigenflow.errors import DivergenceError, GuardedScalarError
from eigenflow.linalg import make_cross, make_spd, svd_factor, sym_eig
from eigenflow.dynamics import (
    RateSchedule,
    integrate,
    sample_gaussian,
    sample_pairs,
    train_online,
    train_pca_online_batch,
    train_svd_online_batch,
)
from eigenflow.rules_pca import (
    PcaRule,
    PcaState,
    constraint_map_sum,
    initial_pca_state,
    pca_field,
    pca_online_rhs,
    pca_residual_fn,
)
from eigenflow.rules_svd import SvdRule, initial_svd_state, svd_field, svd_residual_fn


def test_integrate_linear_field_decay_rate():
    z0 = np.array([2.0, -1.0, 0.5])
    target = np.array([0.3, 0.3, 0.3])
    traj = integrate(lambda z: -(z - target), z0, dt=0.1, steps=200, method="rk4")
    t = traj.times[-1]
    expected = np.linalg.norm(z0 - target) * np.exp(-t)
    assert np.linalg.norm(traj.final_state - target) == pytest.approx(expected, rel=0.01)


def test_integrate_fixed_point_is_constant():
    C = np.diag([2.0, 1.0])
    z0 = PcaState(w=[1.0, 0.0], lam=2.0).to_array()
    traj = integrate(pca_field(PcaRule.L2, C), z0, dt=0.05, steps=50)
    assert traj.final_state == pytest.approx(z0, abs=1e-14)


def test_integrate_zero_field_constant_trajectory():
    z0 = np.array([1.0, 2.0])
    probe = lambda z: (3.5, 0.0, 0.0, 0.0)
    traj = integrate(lambda z: np.zeros_like(z), z0, dt=0.1, steps=10, probe=probe)
    for state in traj.states:
        assert np.array_equal(state, z0)
    assert set(traj.residuals) == {3.5}


def test_rk4_beats_euler_by_three_orders():
    z0 = np.array([1.0])
    target = np.zeros(1)
    field = lambda z: -(z - target)
    exact = np.exp(-1.0)
    rk4 = integrate(field, z0, dt=0.1, steps=10, method="rk4").final_state[0]
    euler = integrate(field, z0, dt=0.1, steps=10, method="euler").final_state[0]
    assert abs(rk4 - exact) <= 1e-3 * abs(euler - exact)


def test_integrate_records_thinned_and_final():
    traj = integrate(lambda z: -z, np.array([1.0]), dt=0.01, steps=95, record_every=30)
    assert traj.steps == [0, 30, 60, 90, 95]


def test_integrate_divergence_aborts_with_diagnostics():
    with pytest.raises(DivergenceError) as err:
        integrate(lambda z: z, np.array([1.0]), dt=1.0, steps=200)
    assert err.value.norm > 1e12
    assert err.value.step > 0


def test_integrate_propagates_guarded_scalar():
    C = np.diag([2.0, 1.0])
    z0 = PcaState(w=[1.0, 0.0], lam=1e-9).to_array()
    with pytest.raises(GuardedScalarError):
        integrate(pca_field(PcaRule.L2, C), z0, dt=0.05, steps=5)


def test_integrate_stop_when():
    resfn = lambda z: np.linalg.norm(z)
    traj = integrate(lambda z: -z, np.array([1.0, 1.0]), dt=0.1, steps=1000,
                     record_every=100, stop_when=lambda z: resfn(z) < 1e-3)
    assert traj.steps[-1] < 1000
    assert np.linalg.norm(traj.final_state) < 1e-3


def test_sample_gaussian_matches_covariance():
    C = np.eye(2)
    xs = sample_gaussian(C, seed=1, count=100000)
    emp = xs.T @ xs / xs.shape[0]
    assert np.linalg.norm(emp - C) < 0.05 * np.linalg.norm(C)
    C = np.diag([4.0, 1.0])
    xs = sample_gaussian(C, seed=2, count=100000)
    ratio = xs[:, 0].var() / xs[:, 1].var()
    assert ratio == pytest.approx(4.0, rel=0.10)


def test_sample_gaussian_deterministic_and_spd_only():
    a = sample_gaussian(np.eye(3), seed=5, count=10)
    b = sample_gaussian(np.eye(3), seed=5, count=10)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        sample_gaussian(np.diag([1.0, -1.0]), seed=0, count=4)


def test_sample_pairs_matches_cross_covariance():
    A = np.diag([3.0, 1.0])
    ys, xs = sample_pairs(A, seed=3, count=100000)
    emp = ys.T @ xs / xs.shape[0]
    assert np.linalg.norm(emp - A) < 0.05 * np.linalg.norm(A)


def test_sample_pairs_noise_free_construction():
    A = make_cross([2.0, 0.5], m=3, n=2, seed=1)
    ys, xs = sample_pairs(A, seed=4, count=50)
    assert ys == pytest.approx(xs @ A.T)
    a2, x2 = sample_pairs(A, seed=4, count=50)
    assert np.array_equal(ys, a2) and np.array_equal(xs, x2)


def test_sample_pairs_noise_keeps_cross_covariance():
    A = make_cross([3.0, 0.8], m=3, n=2, seed=2)
    ys, xs = sample_pairs(A, seed=6, count=100000, noise=0.5)
    emp = ys.T @ xs / xs.shape[0]
    assert np.linalg.norm(emp - A) < 0.05 * np.linalg.norm(A)
    assert not np.allclose(ys, xs @ A.T)


def test_rate_schedule():
    s = RateSchedule(kind="constant", gamma0=0.1, t0=1.0)
    assert s.rate(0) == s.rate(1000) == 0.1
    s = RateSchedule(kind="inverse-time", gamma0=0.05, t0=100.0)
    assert s.rate(0) == pytest.approx(0.05)
    assert s.rate(100) == pytest.approx(0.025)
    with pytest.raises(ValueError):
        RateSchedule(kind="linear")
    with pytest.raises(ValueError):
        RateSchedule(gamma0=-1.0)


def test_train_online_zero_variance_stream_decays_lambda_to_floor():
    # all-zero samples freeze a unit w and shrink lambda until the floor trips
    xs = np.zeros((5000, 2))

    def rhs(x, z):
        return pca_online_rhs(PcaRule.L2, x, PcaState.from_array(z)).to_array()

    z0 = PcaState(w=[1.0, 0.0], lam=1.0).to_array()
    schedule = RateSchedule(kind="constant", gamma0=0.5, t0=1.0)
    with pytest.raises(GuardedScalarError):
        train_online(rhs, xs, z0, schedule, steps=5000)


def test_train_online_zero_steps_returns_start():
    z0 = np.array([1.0, 0.0, 1.0])
    traj = train_online(lambda s, z: z, [], z0, RateSchedule(), steps=0)
    assert len(traj) == 1
    assert np.array_equal(traj.final_state, z0)


def test_train_online_converges_to_principal_direction():
    C = make_spd([10.0, 1.0], seed=7)
    spec = sym_eig(C)
    xs = sample_gaussian(C, seed=8, count=20000)

    def rhs(x, z):
        return pca_online_rhs(PcaRule.L2, x, PcaState.from_array(z)).to_array()

    z0 = initial_pca_state(2, seed=9).to_array()
    traj = train_online(rhs, xs, z0, RateSchedule(kind="constant", gamma0=0.01, t0=1.0),
                        steps=20000, record_every=5000)
    w = traj.final_state[:-1]
    cos = abs(w @ spec.vectors[:, 0]) / np.linalg.norm(w)
    assert cos > 0.998


def test_batched_trainer_matches_streamed_trainer():
    C = make_spd([6.0, 1.5, 0.5], seed=3)
    xs = sample_gaussian(C, seed=21, count=500)
    schedule = RateSchedule(kind="inverse-time", gamma0=0.02, t0=50.0)
    z0 = initial_pca_state(3, seed=11).to_array()

    def rhs(x, z):
        return pca_online_rhs(PcaRule.SUM_MOD, x, PcaState.from_array(z)).to_array()

    traj = train_online(rhs, xs, z0, schedule, steps=500)
    w, lam = train_pca_online_batch(
        PcaRule.SUM_MOD, xs[:, None, :], z0[None, :-1], np.array([z0[-1]]), schedule
    )
    assert traj.final_state[:-1] == pytest.approx(w[0], abs=1e-12)
    assert traj.final_state[-1] == pytest.approx(lam[0], abs=1e-12)


def test_batched_svd_trainer_matches_streamed_trainer():
    A = make_cross([5.0, 1.0], m=3, n=2, seed=0)
    ys, xs = sample_pairs(A, seed=13, count=400)
    schedule = RateSchedule(kind="inverse-time", gamma0=0.01, t0=50.0)
    state = initial_svd_state(3, 2, seed=5, kind=SvdRule.SUM_MOD)
    z0 = state.to_array()

    from eigenflow.rules_svd import SvdState, svd_online_rhs

    def rhs(pair, z):
        y, x = pair
        return svd_online_rhs(SvdRule.SUM_MOD, y, x, SvdState.from_array(z, 3, 2, True)).to_array()

    traj = train_online(rhs, zip(ys, xs), z0, schedule, steps=400)
    u, v, sig, rho = train_svd_online_batch(
        SvdRule.SUM_MOD, ys[:, None, :], xs[:, None, :],
        state.u[None, :], state.v[None, :],
        np.array([state.sigma]), np.array([state.rho]), schedule,
    )
    assert traj.final_state[:3] == pytest.approx(u[0], abs=1e-12)
    assert traj.final_state[3:5] == pytest.approx(v[0], abs=1e-12)
    assert traj.final_state[5] == pytest.approx(sig[0], abs=1e-12)
    assert traj.final_state[6] == pytest.approx(rho[0], abs=1e-12)


@pytest.mark.parametrize("kind,matrix_seed", [(PcaRule.L2, 11), (PcaRule.SUM_MOD, 11)])
def test_averaged_pca_convergence(kind, matrix_seed):
    C = make_spd([8.0, 2.0, 0.8], matrix_seed)
    spec = sym_eig(C)
    resfn = pca_residual_fn(kind, C)
    z0 = initial_pca_state(3, seed=77, C=C).to_array()
    traj = integrate(pca_field(kind, C), z0, dt=0.05, steps=10000, record_every=1000,
                     stop_when=lambda z: np.linalg.norm(resfn(z)) < 1e-8)
    z = traj.final_state
    assert traj.steps[-1] < 10000
    assert np.linalg.norm(resfn(z)) < 1e-8
    w, lam = z[:-1], z[-1]
    cos = abs(w @ spec.vectors[:, 0]) / np.linalg.norm(w)
    assert cos > 1.0 - 1e-9
    assert lam == pytest.approx(spec.values[0], abs=1e-8)
    if kind.is_sum:
        ref = constraint_map_sum(spec.vectors[:, 0])
        assert w == pytest.approx(ref, abs=1e-8)


@pytest.mark.parametrize("kind", [SvdRule.L2, SvdRule.SUM_MOD])
def test_averaged_svd_convergence(kind):
    A = make_cross([8.0, 2.0, 0.8], m=4, n=3, seed=28)
    fac = svd_factor(A)
    resfn = svd_residual_fn(kind, A)
    z0 = initial_svd_state(4, 3, seed=77, A=A, kind=kind).to_array()
    traj = integrate(svd_field(kind, A), z0, dt=0.05, steps=10000, record_every=1000,
                     stop_when=lambda z: np.linalg.norm(resfn(z)) < 1e-8)
    z = traj.final_state
    assert np.linalg.norm(resfn(z)) < 1e-8
    u, v = z[:4], z[4:7]
    assert abs(u @ fac.left.vectors[:, 0]) / np.linalg.norm(u) > 1.0 - 1e-9
    assert abs(v @ fac.right.vectors[:, 0]) / np.linalg.norm(v) > 1.0 - 1e-9
    if kind.is_sum:
        u_ref = constraint_map_sum(fac.left.vectors[:, 0])
        v_ref = constraint_map_sum(fac.right.vectors[:, 0])
        assert z[7] == pytest.approx(float((A @ v_ref).sum()), abs=1e-8)
        assert z[8] == pytest.approx(float((A.T @ u_ref).sum()), abs=1e-8)
    else:
        assert z[7] == pytest.approx(fac.singulars[0], abs=1e-8)


def test_sum_constraint_drift_stays_tiny():
    C = make_spd([5.0, 1.0, 0.4], seed=2)
    z0 = initial_pca_state(3, seed=4, C=C).to_array()
    traj = integrate(pca_field(PcaRule.SUM_MOD, C), z0, dt=0.05, steps=10000, record_every=1000)
    for state in traj.states:
        assert abs(state[:-1].sum() - 1.0) <= 1e-6


def test_trajectory_csv_schema(tmp_path):
    traj = integrate(lambda z: -z, np.array([1.0, 2.0]), dt=0.1, steps=5,
                     state_labels=["w0", "w1"],
                     probe=lambda z: (float(np.linalg.norm(z)), 0.1, 0.2, 0.3))
    path = tmp_path / "traj.csv"
    traj.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,t,w0,w1,residual,constraint_u,constraint_v,angle"
    assert len(lines) == 1 + len(traj)
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[2]) == 1.0
