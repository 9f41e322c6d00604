import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from redict.errors import InvalidArgumentError
from redict.frames import build_harmonic_frame, build_redundant_haar_frame, identity_dictionary
from redict.sampling import (
    build_ensemble,
    fourier_haar_kappa,
    full_sampling,
    measure_and_weights_from_kappa,
    subsample,
)
from redict.solver import (
    AnalysisProblem,
    LinearMap,
    SolverConfig,
    certify_solution,
    operator_norm,
    project_l2_ball,
    prox_weighted_l1,
    solve_analysis,
)


def _rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _sparse_signal(D, s, rng):
    z = np.zeros(D.N, dtype=complex)
    z[rng.choice(D.N, s, replace=False)] = _rand_complex(rng, s)
    f = D.synthesis(z)
    return f / np.linalg.norm(f)


def _vds_operator(p, m, seed):
    n = 2**p
    nu, w = measure_and_weights_from_kappa(fourier_haar_kappa(n))
    return subsample(build_ensemble("dft", n, nu, scale=np.ones(n)), m, seed, precond=w)


# -- proximal maps ---------------------------------------------------------------

def test_prox_soft_threshold_example():
    assert prox_weighted_l1(np.array([3.0]), 1.0)[0] == pytest.approx(2.0)


def test_prox_zero_inside_threshold():
    v = np.array([0.5, -1.0, 0.0, 2j])
    out = prox_weighted_l1(v, 1.0, [1.0, 1.0, 1.0, 2.0])
    np.testing.assert_array_equal(out, 0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), phi=st.floats(0, 2 * np.pi), theta=st.floats(0.01, 3))
def test_prox_phase_equivariance(seed, phi, theta):
    v = _rand_complex(np.random.default_rng(seed), 7)
    rot = np.exp(1j * phi)
    np.testing.assert_allclose(prox_weighted_l1(rot * v, theta), rot * prox_weighted_l1(v, theta),
                               atol=1e-12)


def test_prox_rejects_nonpositive_theta():
    with pytest.raises(InvalidArgumentError):
        prox_weighted_l1(np.ones(2), 0.0)


def test_ball_projection_example():
    np.testing.assert_allclose(project_l2_ball(np.array([3.0, 4.0]), np.zeros(2), 1.0), [0.6, 0.8])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), radius=st.floats(0, 5))
def test_ball_projection_boundary(seed, radius):
    rng = np.random.default_rng(seed)
    c = _rand_complex(rng, 5)
    q = c + _rand_complex(rng, 5) * 10
    out = project_l2_ball(q, c, radius)
    if np.linalg.norm(q - c) > radius:
        assert abs(np.linalg.norm(out - c) - radius) <= 1e-12
    inside = c + 0.0 * q
    np.testing.assert_array_equal(project_l2_ball(inside, c, radius), inside)


def test_ball_projection_negative_radius():
    with pytest.raises(InvalidArgumentError):
        project_l2_ball(np.ones(2), np.zeros(2), -1.0)


# -- operator norm ---------------------------------------------------------------

def test_operator_norm_orthonormal_and_diagonal():
    Q, _ = np.linalg.qr(_rand_complex(np.random.default_rng(0), 6, 6))
    assert operator_norm(Q) == pytest.approx(1.0, abs=1e-6)
    assert operator_norm(np.diag([1.0, 3.0])) == pytest.approx(3.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_operator_norm_matches_svd(seed):
    M = np.random.default_rng(seed).standard_normal((20, 15))
    want = np.linalg.svd(M, compute_uv=False)[0]
    assert operator_norm(M, iters=1000, tol=1e-12) == pytest.approx(want, abs=1e-6)


def test_operator_norm_zero_map_and_matrix_free():
    assert operator_norm(np.zeros((3, 4))) == 0.0
    K = LinearMap(lambda v: 2 * v, lambda g: 2 * g, (5, 5))
    assert operator_norm(K) == pytest.approx(2.0)
    op = full_sampling(build_ensemble("dft", 8))
    assert operator_norm(op) == pytest.approx(1.0, abs=1e-6)


# -- problem validation ------------------------------------------------------------

def test_problem_validation():
    op = subsample(build_ensemble("dft", 8), 4, 0)
    D = build_harmonic_frame(8, 1)
    with pytest.raises(InvalidArgumentError):
        AnalysisProblem(op, D, np.zeros(4), epsilon=-1.0)
    with pytest.raises(InvalidArgumentError):
        AnalysisProblem(op, D, np.zeros(5))
    with pytest.raises(InvalidArgumentError):
        AnalysisProblem(op, build_harmonic_frame(4, 1), np.zeros(4))
    with pytest.raises(InvalidArgumentError):
        solve_analysis(AnalysisProblem(op, D, np.zeros(4)), f0=np.zeros(3))


@pytest.mark.parametrize("kw", [dict(max_iters=0), dict(theta=1.5), dict(tol_rel_change=0),
                                dict(balance=-1.0)])
def test_solver_config_ranges(kw):
    with pytest.raises(InvalidArgumentError):
        SolverConfig(**kw)


def test_solver_config_from_dict_rejects_unknown():
    with pytest.raises(InvalidArgumentError):
        SolverConfig.from_dict({"max_iter": 3})


# -- solves ------------------------------------------------------------------------

@pytest.mark.parametrize("kind,spec", [("dft", "harmonic:16,3"), ("standard", "harmonic:32,1"),
                                       ("dft", "haar:4")])
def test_isometry_recovers_exactly(kind, spec):
    from redict.frames import parse_dict_spec

    D = parse_dict_spec(spec)
    op = full_sampling(build_ensemble(kind, D.n))
    f = _sparse_signal(D, 3, np.random.default_rng(1))
    problem = AnalysisProblem(op, D, op.forward(f))
    res = solve_analysis(problem)
    assert res.converged
    assert np.linalg.norm(res.f_sharp - f) <= 1e-6
    cert = certify_solution(problem, res, f)
    assert cert.feasible and cert.reference_feasible


def test_noiseless_vds_recovery_and_merit_monitor():
    D = build_redundant_haar_frame(6)
    op = _vds_operator(6, 256, seed=4)
    f = _sparse_signal(D, 3, np.random.default_rng(4))
    res = solve_analysis(AnalysisProblem(op, D, op.forward(f)), SolverConfig(trace_every=100))
    assert res.converged and res.merit_increases == 0
    assert np.linalg.norm(res.f_sharp - f) <= 1e-4
    assert res.trace and res.trace[0][0] == 100


def test_nonconvergence_is_reported():
    D = build_harmonic_frame(64, 1)
    op = subsample(build_ensemble("standard", 64), 32, 0)
    f = _sparse_signal(D, 3, np.random.default_rng(0))
    res = solve_analysis(AnalysisProblem(op, D, op.forward(f)), SolverConfig(max_iters=5))
    assert not res.converged and res.iterations == 5
    assert res.feasibility_gap <= 1e-8  # the exit correction still restores feasibility


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("eps", [0.0, 0.05])
def test_minimizer_property(seed, eps):
    D = build_harmonic_frame(32, 1)
    op = subsample(build_ensemble("standard", 32), 16, seed)
    rng = np.random.default_rng(seed)
    f = _sparse_signal(D, 3, rng)
    e = _rand_complex(rng, 16)
    y = op.forward(f) + (eps * e / np.linalg.norm(e) if eps else 0)
    problem = AnalysisProblem(op, D, y, eps)
    res = solve_analysis(problem)
    cert = certify_solution(problem, res, f)
    assert cert.reference_feasible and cert.feasible
    assert cert.objective_vs_reference <= 1e-6


def test_matches_cvxpy_oracle():
    cp = pytest.importorskip("cvxpy")
    D = build_harmonic_frame(16, 1)
    op = subsample(build_ensemble("standard", 16), 8, 2)
    rng = np.random.default_rng(2)
    f = _sparse_signal(D, 2, rng)
    y = op.forward(f)
    x = cp.Variable(16, complex=True)
    A = np.asarray(op.matrix())
    cp.Problem(cp.Minimize(cp.norm1(D.entries.conj().T @ x)), [cp.norm(A @ x - y) <= 0.01]).solve()
    res = solve_analysis(AnalysisProblem(op, D, y, 0.01),
                         SolverConfig(max_iters=20000, tol_rel_change=1e-9))
    ref_obj = float(np.abs(D.entries.conj().T @ x.value).sum())
    assert res.objective == pytest.approx(ref_obj, rel=1e-4)


def test_fixed_point_on_tiny_instance():
    # n = 2, one measurement of the first coordinate: the feasible set is
    # {(y0, t)}, and the optimum over t is found by a dense grid search
    D = build_harmonic_frame(2, 1)
    op = full_sampling(build_ensemble("standard", 2))
    op = type(op)(op.ensemble, np.array([0]))
    f_true = np.array([0.7 - 0.2j, 0.3 + 0.5j])
    y = op.forward(f_true)
    y0 = y[0] / op.row_weights()[0]
    Dh = D.entries.conj().T
    best_t, best = None, np.inf
    grid = np.linspace(-2, 2, 801)
    for span in (2.0, 0.02, 0.0002):
        center = 0 if best_t is None else best_t
        re, im = np.meshgrid(center.real + grid * span / 2, center.imag + grid * span / 2)
        t = (re + 1j * im).ravel()
        vals = np.abs(Dh[:, :1] * y0 + Dh[:, 1:] * t).sum(axis=0)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_t = vals[k], t[k]
    problem = AnalysisProblem(op, D, y)
    res = solve_analysis(problem, SolverConfig(max_iters=20000, tol_rel_change=1e-12))
    assert abs(res.f_sharp[1] - best_t) <= 1e-5
    assert res.objective <= best + 1e-9
    steps = []
    f = res.f_sharp
    dual = res.dual
    for _ in range(5):
        nxt = solve_analysis(problem, SolverConfig(max_iters=1), f0=f, dual0=dual)
        steps.append(np.linalg.norm(nxt.f_sharp - f))
        f, dual = nxt.f_sharp, nxt.dual
    assert max(steps) <= 1e-6


@pytest.mark.parametrize("eps", [0.0, 0.05])
def test_scaling_covariance(eps):
    D = build_redundant_haar_frame(4)
    op = _vds_operator(4, 12, seed=3)
    rng = np.random.default_rng(0)
    f = _rand_complex(rng, 16)
    f /= np.linalg.norm(f)
    y = op.forward(f)
    cfg = SolverConfig(max_iters=20000, tol_rel_change=1e-10)
    a = solve_analysis(AnalysisProblem(op, D, y, eps), cfg).f_sharp
    b = solve_analysis(AnalysisProblem(op, D, 3 * y, 3 * eps), cfg).f_sharp
    assert np.linalg.norm(b - 3 * a) <= 1e-6 * np.linalg.norm(3 * a)


def test_unit_weights_reproduce_unweighted_path():
    D = build_harmonic_frame(16, 1)
    op = subsample(build_ensemble("standard", 16), 10, 5)
    f = _sparse_signal(D, 2, np.random.default_rng(5))
    y = op.forward(f)
    a = solve_analysis(AnalysisProblem(op, D, y)).f_sharp
    b = solve_analysis(AnalysisProblem(op, D, y, omega=np.ones(D.N))).f_sharp
    assert np.linalg.norm(a - b) <= 1e-8


def test_weights_change_the_solution():
    D = build_harmonic_frame(16, 1)
    op = subsample(build_ensemble("standard", 16), 8, 5)
    f = _sparse_signal(D, 2, np.random.default_rng(5))
    y = op.forward(f)
    w = np.ones(D.N)
    w[:8] = 3.0
    a = solve_analysis(AnalysisProblem(op, D, y)).f_sharp
    b = solve_analysis(AnalysisProblem(op, D, y, omega=w)).f_sharp
    assert np.linalg.norm(a - b) > 1e-6


def test_certify_without_reference():
    D = identity_dictionary(4)
    op = full_sampling(build_ensemble("dft", 4))
    problem = AnalysisProblem(op, D, op.forward(np.ones(4)))
    cert = certify_solution(problem, solve_analysis(problem))
    assert cert.feasible and cert.error_l2 is None and cert.objective_vs_reference is None


@pytest.mark.parametrize("seed", range(3))
def test_certified_drip_instance_recovers(seed):
    from redict.drip import drip_delta

    D = build_harmonic_frame(8, 1)
    op = subsample(build_ensemble("dft", 8), 5000, 1)
    assert drip_delta(op, D, 2).delta < 0.08
    f = _sparse_signal(D, 1, np.random.default_rng(seed))
    res = solve_analysis(AnalysisProblem(op, D, op.forward(f)))
    assert np.linalg.norm(res.f_sharp - f) <= 1e-4
