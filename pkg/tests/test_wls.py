import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from smokefc.errors import ConvergenceError
from smokefc.wls import WlsParams, assemble_system, build_weights, solve, wls_filter

from conftest import grad_energy, step_image

TIGHT = dict(solver_tol=1e-12, solver_max_iter=20000)


def dense_oracle(channel, guide, lam, alpha=1.2, eps=1e-4):
    """(I + lam * (Dx' Ax Dx + Dy' Ay Dy)) u = g solved densely.

    Built from explicit forward-difference matrices; shares nothing with the
    stencil code except the weight formula.
    """
    h, w = channel.shape
    n = h * w
    idx = np.arange(n).reshape(h, w)
    ell = np.log10(guide + 1e-4)
    rows_x, rows_y, wx, wy = [], [], [], []
    for i in range(h):
        for j in range(w):
            if j + 1 < w:
                r = np.zeros(n)
                r[idx[i, j + 1]], r[idx[i, j]] = 1.0, -1.0
                rows_x.append(r)
                wx.append(1.0 / (abs(ell[i, j + 1] - ell[i, j]) ** alpha + eps))
            if i + 1 < h:
                r = np.zeros(n)
                r[idx[i + 1, j]], r[idx[i, j]] = 1.0, -1.0
                rows_y.append(r)
                wy.append(1.0 / (abs(ell[i + 1, j] - ell[i, j]) ** alpha + eps))
    L = np.zeros((n, n))
    if rows_x:
        Dx = np.array(rows_x)
        L += Dx.T @ np.diag(wx) @ Dx
    if rows_y:
        Dy = np.array(rows_y)
        L += Dy.T @ np.diag(wy) @ Dy
    A = np.eye(n) + lam * L
    return np.linalg.solve(A, channel.ravel()).reshape(h, w), A


def test_weights_constant_guide():
    wts = build_weights(np.full((4, 5), 0.5), WlsParams())
    np.testing.assert_allclose(wts.ax[:, :-1], 1e4)
    np.testing.assert_allclose(wts.ay[:-1, :], 1e4)
    np.testing.assert_array_equal(wts.ax[:, -1], 0.0)
    np.testing.assert_array_equal(wts.ay[-1, :], 0.0)


def test_weights_single_difference():
    wts = build_weights(np.array([[0.1, 0.9]]), WlsParams(alpha=1.2, eps_w=1e-4))
    expected = 1.0 / (abs(np.log10(0.9001) - np.log10(0.1001)) ** 1.2 + 1e-4)
    assert wts.ax[0, 0] == pytest.approx(expected, rel=1e-14)


@given(arrays(np.float64, (5, 6), elements=st.floats(0.0, 1.0)))
def test_weights_positive_and_finite(guide):
    wts = build_weights(guide, WlsParams())
    inner = np.concatenate([wts.ax[:, :-1].ravel(), wts.ay[:-1, :].ravel()])
    assert np.all(np.isfinite(inner)) and np.all(inner > 0)


def test_assemble_lambda_zero_is_identity(rng):
    g = rng.random((4, 4))
    s = assemble_system(build_weights(g, WlsParams()), g, 0.0)
    np.testing.assert_array_equal(s.diag, 1.0)
    assert not s.off_x.any() and not s.off_y.any()


def test_assemble_two_pixels():
    g = np.array([[0.1, 0.9]])
    wts = build_weights(g, WlsParams())
    w = wts.ax[0, 0]
    A = assemble_system(wts, g, 0.5).to_sparse().toarray()
    lw = 0.5 * w
    np.testing.assert_allclose(A, [[1 + lw, -lw], [-lw, 1 + lw]], rtol=1e-15)


def test_assemble_matches_dense_oracle_and_rows_sum(rng):
    g = rng.random((5, 4))
    lam = 0.7
    A = assemble_system(build_weights(g, WlsParams()), g, lam).to_sparse().toarray()
    _, A_ref = dense_oracle(g, g, lam)
    np.testing.assert_allclose(A, A_ref, rtol=1e-12)
    np.testing.assert_allclose(A, A.T)
    # row sums of the lambda * L part vanish
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-9)
    off = A - np.diag(np.diag(A))
    assert off.max() <= 0.0


def test_assemble_shape_mismatch():
    wts = build_weights(np.zeros((3, 3)), WlsParams())
    with pytest.raises(ValueError):
        assemble_system(wts, np.zeros((3, 4)), 1.0)


def test_params_validation():
    with pytest.raises(ValueError):
        WlsParams(lam=-1)
    with pytest.raises(ValueError):
        WlsParams(alpha=0)


def test_filter_lambda_zero_exact(rng):
    g = rng.random((6, 7))
    np.testing.assert_array_equal(wls_filter(g, g, WlsParams(lam=0.0)), g)


def test_solve_identity_system_exact(rng):
    g = rng.random((6, 7))
    s = assemble_system(build_weights(g, WlsParams()), g, 0.0)
    np.testing.assert_array_equal(solve(s, WlsParams()), g)


def test_solve_matches_dense_8x8(rng):
    g = rng.random((8, 8))
    u = wls_filter(g, g, WlsParams(lam=0.5, **TIGHT))
    ref, _ = dense_oracle(g, g, 0.5)
    assert np.abs(u - ref).max() <= 1e-8


def test_solve_reaches_requested_residual(rng):
    g = rng.random((30, 40))
    p = WlsParams(lam=0.5)
    s = assemble_system(build_weights(g, p), g, 0.5)
    u = solve(s, p)
    res = np.linalg.norm(s.to_sparse() @ u.ravel() - g.ravel()) / np.linalg.norm(g)
    assert res <= p.solver_tol


def test_solve_raises_with_residual(rng):
    g = rng.random((40, 40))
    with pytest.raises(ConvergenceError) as info:
        wls_filter(g, g, WlsParams(lam=2.0, solver_tol=1e-14, solver_max_iter=3))
    assert info.value.residual is not None and info.value.residual > 1e-14


@pytest.mark.parametrize("lam", [0.125, 0.5, 2.0])
def test_constant_is_fixed_point(lam):
    g = np.full((9, 11), 0.37)
    np.testing.assert_allclose(wls_filter(g, g, WlsParams(lam=lam)), 0.37, atol=1e-10)


def test_separate_guide(rng):
    g = rng.random((6, 6))
    guide = rng.random((6, 6))
    u = wls_filter(g, guide, WlsParams(lam=0.5, **TIGHT))
    ref, _ = dense_oracle(g, guide, 0.5)
    np.testing.assert_allclose(u, ref, atol=1e-9)


def test_mean_preserved(rng):
    g = rng.random((20, 24))
    u = wls_filter(g, g, WlsParams(lam=2.0))
    assert abs(u.mean() - g.mean()) <= 1e-6


def test_output_range(rng):
    for _ in range(10):
        g = rng.random((16, 16))
        u = wls_filter(g, g, WlsParams(lam=2.0, **TIGHT))
        assert u.min() >= -1e-6 and u.max() <= 1 + 1e-6


def test_mirror_symmetry(rng):
    g = rng.random((12, 15))
    p = WlsParams(lam=0.5, **TIGHT)
    np.testing.assert_allclose(wls_filter(g[:, ::-1], g[:, ::-1], p), wls_filter(g, g, p)[:, ::-1], atol=1e-10)


def test_larger_lambda_is_smoother(rng):
    g = rng.random((32, 32))
    e1 = grad_energy(wls_filter(g, g, WlsParams(lam=0.125)))
    e2 = grad_energy(wls_filter(g, g, WlsParams(lam=0.5)))
    assert e2 <= e1


def test_step_edge_kept_while_flat_noise_is_removed(rng):
    clean = step_image(32, 32)
    u = wls_filter(clean, clean, WlsParams(lam=0.5))
    # observed jump 0.988
    assert (u[:, 16] - u[:, 15]).min() >= 0.8
    noisy = np.clip(step_image(32, 32, 0.2, 0.8) + 0.01 * rng.standard_normal((32, 32)), 0, 1)
    v = wls_filter(noisy, noisy, WlsParams(lam=0.5))
    # observed: jump retained at 0.84 of 0.6; variance ratio 25-30 on the
    # bright plateau, only ~2 on the dark one where log-gradients of the noise
    # are large and the weights keep it
    assert (v[:, 16] - v[:, 15]).mean() >= 0.8 * 0.6
    assert noisy[:, 20:].var() / v[:, 20:].var() >= 10.0
    assert noisy[:, :12].var() / v[:, :12].var() >= 1.5
