"""Data term, proximal maps, simplex projection, and both ADMM solvers
on small instances."""

import itertools

import numpy as np
import pytest

from shearseg.frame import build_system
from shearseg.regularizers import (
    GRAM_IDENTITY,
    LinearOp,
    build_nl_graph,
    grad_operator,
    nl_operator,
)
from shearseg.segmentation import (
    AdmmConfig,
    ConvergenceRecord,
    DivergenceError,
    CgError,
    _solve_u_cg,
    admm_generic,
    admm_shearlet,
    as_codebook,
    data_term,
    extract_labels,
    group_shrink,
    mislabel_rate,
    project_simplex,
    soft_shrink,
)


# ---------- data term ----------


def test_data_term_gray_midpoint():
    f = np.full((4, 4), 0.5)
    s = data_term(f, [0.0, 1.0], p=2)
    np.testing.assert_allclose(s[0], 0.25)
    np.testing.assert_allclose(s[1], 0.25)


def test_data_term_exact_match_layer():
    f = np.full((4, 4), 0.3)
    s = data_term(f, [0.3, 0.9], p=2)
    assert np.all(s[0] == 0.0)
    assert np.all(s[1] > 0.0)


def test_data_term_rgb_unit_distance():
    f = np.zeros((2, 2, 3))
    f[:, :, 0] = 1.0  # all pixels (1, 0, 0)
    s = data_term(f, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], p=2)
    np.testing.assert_allclose(s[0], 1.0)
    np.testing.assert_allclose(s[1], 0.0)


def test_data_term_p1():
    f = np.full((2, 2), 0.5)
    s = data_term(f, [0.0, 1.0], p=1)
    np.testing.assert_allclose(s, 0.5)
    with pytest.raises(ValueError):
        data_term(f, [0.0, 1.0], p=3)


def test_data_term_channel_mismatch():
    with pytest.raises(ValueError):
        data_term(np.zeros((4, 4, 3)), [0.0, 1.0])
    with pytest.raises(ValueError):
        data_term(np.zeros((4, 4)), [[0, 0, 0], [1, 1, 1]])


def test_as_codebook_shapes():
    cb = as_codebook([0.0, 0.5, 1.0])
    assert cb.shape == (3, 1)
    with pytest.raises(ValueError):
        as_codebook([0.5])
    with pytest.raises(ValueError):
        as_codebook([0.0, np.nan])


# ---------- proximal maps ----------


def test_soft_shrink_values():
    assert soft_shrink(5.0, 2.0) == 3.0
    assert soft_shrink(-1.0, 2.0) == 0.0
    assert soft_shrink(-5.0, 2.0) == -3.0
    x = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(soft_shrink(x, 0.0), x)
    with pytest.raises(ValueError):
        soft_shrink(1.0, -0.1)


def test_soft_shrink_odd_and_nonexpansive():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=200), rng.normal(size=200)
    np.testing.assert_allclose(soft_shrink(-x, 0.7), -soft_shrink(x, 0.7), atol=0)
    assert np.all(np.abs(soft_shrink(x, 0.7) - soft_shrink(y, 0.7)) <= np.abs(x - y) + 1e-15)


def test_group_shrink_pythagorean():
    v = np.zeros((2, 1, 1, 1))
    v[0, 0, 0, 0], v[1, 0, 0, 0] = 3.0, 4.0
    np.testing.assert_allclose(group_shrink(v, 2, 5.0), 0.0)
    out = group_shrink(v, 2, 2.5)
    assert out[0, 0, 0, 0] == pytest.approx(1.5)
    assert out[1, 0, 0, 0] == pytest.approx(2.0)
    np.testing.assert_array_equal(group_shrink(np.zeros((2, 1, 2, 2)), 2, 1.0), 0.0)
    with pytest.raises(ValueError):
        group_shrink(v, 2, -1.0)


def brute_force_simplex(g):
    """Exhaustive active-set search for the closest simplex point."""
    q = g.size
    best, best_d = None, np.inf
    for free in itertools.chain.from_iterable(
        itertools.combinations(range(q), r) for r in range(1, q + 1)
    ):
        x = np.zeros(q)
        gf = g[list(free)]
        xf = gf + (1.0 - gf.sum()) / len(free)
        if np.any(xf < -1e-14):
            continue
        x[list(free)] = np.maximum(xf, 0.0)
        d = float(np.sum((x - g) ** 2))
        if d < best_d:
            best, best_d = x, d
    return best


def test_project_simplex_examples():
    np.testing.assert_allclose(project_simplex(np.array([0.5, 0.5])), [0.5, 0.5])
    np.testing.assert_allclose(project_simplex(np.array([1.0, 1.0])), [0.5, 0.5])
    np.testing.assert_allclose(project_simplex(np.array([-1.0, 1.0])), [0.0, 1.0])


def test_project_simplex_against_oracle():
    rng = np.random.default_rng(1)
    for q in (2, 3, 4):
        for _ in range(300):
            g = rng.normal(scale=2.0, size=q)
            got = project_simplex(g.reshape(q, 1, 1))[:, 0, 0]
            want = brute_force_simplex(g)
            np.testing.assert_allclose(got, want, atol=1e-12)


def test_project_simplex_feasible_and_idempotent():
    rng = np.random.default_rng(2)
    g = rng.normal(scale=3.0, size=(4, 8, 8))
    x = project_simplex(g)
    assert x.min() >= 0.0
    np.testing.assert_allclose(x.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(project_simplex(x), x, atol=1e-12)


# ---------- labeling utilities ----------


def test_extract_labels():
    u = np.zeros((3, 2, 2))
    u[2, 0, 0] = 0.5
    u[0, 0, 1] = 0.5
    u[:, 1, 0] = [0.5, 0.5, 0.0]  # tie: lowest index wins
    u[:, 1, 1] = [0.2, 0.3, 0.5]
    labels = extract_labels(u)
    np.testing.assert_array_equal(labels, [[3, 1], [1, 3]])


def test_mislabel_rate():
    a = np.ones((10, 10), dtype=int)
    assert mislabel_rate(a, a) == 0.0
    assert mislabel_rate(a, a + 1) == 1.0
    b = a.copy()
    b[3, 7] = 2
    assert mislabel_rate(b, a) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        mislabel_rate(a, np.ones((5, 5), dtype=int))


# ---------- configuration ----------


def test_admm_config_validation():
    cfg = AdmmConfig(gamma=0.5, weights=0.1, max_iters=10)
    assert cfg.weights.shape == (1,)
    assert cfg.tol == 0.0
    for bad in (
        dict(gamma=0.0, weights=0.1, max_iters=10),
        dict(gamma=1.0, weights=-0.1, max_iters=10),
        dict(gamma=1.0, weights=np.inf, max_iters=10),
        dict(gamma=1.0, weights=0.1, max_iters=0),
        dict(gamma=1.0, weights=0.1, max_iters=10, tol=-1e-3),
    ):
        with pytest.raises(ValueError):
            AdmmConfig(**bad)


def test_convergence_record_csv():
    rec = ConvergenceRecord()
    rec.append(1, 0.5, 10.0)
    rec.append(2, 0.25, 9.0)
    lines = list(rec.csv_lines())
    assert lines[0] == "iteration,gap,energy"
    assert lines[1].startswith("1,5.0") and lines[2].startswith("2,2.5")


# ---------- solvers ----------


def pure_data_instance(n=16):
    s = np.zeros((2, n, n))
    s[1] = 1.0
    return s


def test_shearlet_pure_data_term():
    system = build_system(16)
    s = pure_data_instance()
    res = admm_shearlet(s, system, AdmmConfig(gamma=1.0, weights=0.0, max_iters=40))
    assert np.all(extract_labels(res.w) == 1)
    np.testing.assert_allclose(res.w.sum(axis=0), 1.0, atol=1e-12)


def test_constant_image_labels_in_one_iteration():
    system = build_system(16)
    f = np.full((16, 16), 0.6)
    s = data_term(f, [0.1, 0.6, 0.9])
    res = admm_shearlet(s, system, AdmmConfig(gamma=1.0, weights=0.0, max_iters=1))
    assert np.all(extract_labels(res.w) == 2)


def test_solvers_agree_at_zero_weight():
    rng = np.random.default_rng(3)
    n = 16
    f = np.where(rng.uniform(size=(n, n)) > 0.5, 0.8, 0.2)
    s = data_term(f, [0.2, 0.8])
    want = np.argmin(s, axis=0) + 1
    cfg = AdmmConfig(gamma=1.0, weights=0.0, max_iters=200)
    lab_sh = extract_labels(admm_shearlet(s, build_system(n), cfg).w)
    lab_tv = extract_labels(admm_generic(s, grad_operator(n), cfg).w)
    np.testing.assert_array_equal(lab_sh, want)
    np.testing.assert_array_equal(lab_tv, want)


def test_shearlet_denoises_blocks():
    rng = np.random.default_rng(4)
    n = 16
    clean = np.zeros((n, n))
    clean[:, n // 2 :] = 1.0
    truth = clean.astype(int) + 1
    noisy = clean + rng.normal(0, 0.2, size=(n, n))
    s = data_term(noisy, [0.0, 1.0])
    res = admm_shearlet(s, build_system(n), AdmmConfig(gamma=1.0, weights=0.05, max_iters=30))
    raw = extract_labels(np.stack([-s[0], -s[1]]))
    solved = extract_labels(res.w)
    assert mislabel_rate(solved, truth) <= mislabel_rate(raw, truth)
    # feasibility and gap trend on the recorded window
    assert res.w.min() >= 0.0
    np.testing.assert_allclose(res.w.sum(axis=0), 1.0, atol=1e-12)
    gaps = res.record.gaps
    assert gaps[-1] <= gaps[-10]


def test_normal_equation_residuals():
    rng = np.random.default_rng(5)
    n = 16
    s = data_term(rng.uniform(size=(n, n)), [0.2, 0.5, 0.9])
    res = admm_shearlet(
        s,
        build_system(n),
        AdmmConfig(gamma=0.5, weights=0.02, max_iters=5),
        collect_normal_residual=True,
    )
    assert len(res.record.normal_residuals) == 5
    assert max(res.record.normal_residuals) < 1e-10


def test_scale_weight_vector_and_mismatch_warning():
    n = 16  # two scales, so 3 weights expected
    system = build_system(n)
    s = pure_data_instance(n)
    cfg_scalar = AdmmConfig(gamma=1.0, weights=0.03, max_iters=3)
    cfg_vector = AdmmConfig(gamma=1.0, weights=[0.03, 0.03, 0.03], max_iters=3)
    res_a = admm_shearlet(s, system, cfg_scalar)
    res_b = admm_shearlet(s, system, cfg_vector)
    np.testing.assert_array_equal(res_a.w, res_b.w)
    with pytest.warns(UserWarning):
        admm_shearlet(s, system, AdmmConfig(gamma=1.0, weights=[0.03, 0.01], max_iters=1))


def test_tol_early_exit():
    system = build_system(16)
    s = pure_data_instance()
    res = admm_shearlet(s, system, AdmmConfig(gamma=1.0, weights=0.0, max_iters=500, tol=1e-6))
    assert res.iterations_run < 500


def test_generic_rejects_weight_vector():
    s = pure_data_instance()
    with pytest.raises(ValueError):
        admm_generic(s, grad_operator(16), AdmmConfig(gamma=1.0, weights=[0.1, 0.2], max_iters=2))


def test_generic_solver_nl_small():
    rng = np.random.default_rng(6)
    n = 8
    f = np.where(rng.uniform(size=(n, n)) > 0.5, 0.9, 0.1)
    s = data_term(f, [0.1, 0.9])
    op = nl_operator(build_nl_graph(f, window=5))
    res = admm_generic(s, op, AdmmConfig(gamma=1.0, weights=0.0, max_iters=400))
    np.testing.assert_array_equal(extract_labels(res.w), np.argmin(s, axis=0) + 1)


def test_divergence_guard_names_subproblem():
    n = 8
    s = pure_data_instance(n)
    bad = LinearOp(
        shape_in=(n, n),
        shape_out=(1, n, n),
        apply=lambda u: np.full((1, n, n), np.nan),
        apply_adjoint=lambda y: np.zeros((n, n)),
        gram_structure=GRAM_IDENTITY,
        gram_scale=1.0,
    )
    with pytest.raises(DivergenceError) as err:
        admm_generic(s, bad, AdmmConfig(gamma=1.0, weights=0.1, max_iters=3))
    assert err.value.subproblem in ("u-update", "v-update")
    assert err.value.iteration == 1


def test_data_term_validation_in_solvers():
    system = build_system(16)
    cfg = AdmmConfig(gamma=1.0, weights=0.0, max_iters=1)
    with pytest.raises(ValueError):
        admm_shearlet(np.zeros((1, 16, 16)), system, cfg)  # q < 2
    with pytest.raises(ValueError):
        admm_shearlet(np.full((2, 16, 16), np.nan), system, cfg)
    with pytest.raises(ValueError):
        admm_shearlet(np.zeros((2, 8, 8)), system, cfg)  # side mismatch
    with pytest.raises(ValueError):
        admm_generic(np.zeros((2, 8, 8)), grad_operator(16), cfg)


def test_cg_error_on_iteration_starvation():
    import scipy.sparse

    rng = np.random.default_rng(7)
    n = 8
    op = nl_operator(build_nl_graph(rng.uniform(size=(n, n)), window=5))
    a_mat = scipy.sparse.identity(n * n, format="csr") + op.gram_matrix
    rhs = rng.normal(size=(n, n))
    with pytest.raises(CgError):
        _solve_u_cg(rhs, a_mat, np.zeros((n, n)), rtol=1e-14, maxiter=1)
