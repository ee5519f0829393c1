import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdcheck import max_rel_error, numeric_grads
from sgmorph.numerics import autodiff as ad
from sgmorph.numerics import (
    Adam,
    DiagonalGaussian,
    Tape,
    gaussian_kl,
    gaussian_sample_reparam,
    pca_top2,
    tanh_gaussian_logprob,
)
from sgmorph.numerics.layers import Mlp


def test_matmul_identity():
    a = np.array([[1.5, -2.0], [0.25, 3.0]])
    assert np.array_equal(ad.matmul(np.eye(2), a).data, a)


def test_relu_definition():
    assert ad.relu(-1.5).item() == 0.0
    assert ad.relu(2.0).item() == 2.0


def test_scatter_add_of_zero_rows_is_zero():
    out = ad.scatter_add_rows(np.zeros((0, 3)), np.zeros(0, dtype=int), 4)
    assert out.shape == (4, 3)
    assert not out.data.any()


@pytest.mark.parametrize(
    "op,args",
    [
        (ad.matmul, (np.ones((2, 3)), np.ones((2, 3)))),
        (ad.add, (np.ones((2, 3)), np.ones((3, 2)))),
        (ad.mul, (np.ones((2, 3)), np.ones((4, 3)))),
        (ad.minimum, (np.ones((2, 3)), np.ones((2, 1)))),
    ],
)
def test_shape_mismatch_raises(op, args):
    with pytest.raises(ad.ShapeError):
        op(*args)


def test_concat_mismatch_raises():
    with pytest.raises(ad.ShapeError):
        ad.concat([np.ones((2, 3)), np.ones((3, 3))], axis=1)


def test_non_finite_forward_is_an_error():
    with pytest.raises(FloatingPointError), np.errstate(invalid="ignore"):
        ad.log(np.array([[-1.0]]))


def test_square_derivative_at_three():
    x = ad.parameter(3.0)
    with Tape() as tape:
        y = ad.square(x)
    (g,) = tape.gradient(y, [x])
    assert g[0, 0] == 6.0


def test_tanh_derivative_at_zero():
    x = ad.parameter(0.0)
    with Tape() as tape:
        y = ad.tanh(x)
    (g,) = tape.gradient(y, [x])
    assert g[0, 0] == 1.0


def test_non_scalar_loss_rejected():
    x = ad.parameter(np.ones((2, 2)))
    with Tape() as tape:
        y = x * 2.0
    with pytest.raises(ad.ShapeError):
        tape.gradient(y, [x])


def test_unused_leaf_gets_exact_zero():
    x = ad.parameter(np.ones((2, 2)))
    unused = ad.parameter(np.full((3, 1), 7.0))
    with Tape() as tape:
        y = ad.sum(x * x)
    gx, gu = tape.gradient(y, [x, unused])
    assert np.array_equal(gu, np.zeros((3, 1)))
    assert np.array_equal(gx, 2.0 * np.ones((2, 2)))


def test_tape_is_single_use_unless_persistent():
    x = ad.parameter(2.0)
    with Tape() as tape:
        y = x * x
    tape.gradient(y, [x])
    with pytest.raises(RuntimeError):
        tape.gradient(y, [x])
    with Tape(persistent=True) as tape:
        y = x * x
    assert tape.gradient(y, [x])[0][0, 0] == tape.gradient(y, [x])[0][0, 0] == 4.0


def test_constants_outside_tape_are_not_recorded():
    x = ad.parameter(2.0)
    y = x * x  # no active tape
    with Tape() as tape:
        z = y * 3.0
    assert len(tape) == 0
    assert tape.gradient(ad.sum(ad.Tensor(0.0)), [x])[0][0, 0] == 0.0
    del z


def test_primitive_composition_matches_finite_differences():
    rng = np.random.default_rng(0)
    a = ad.parameter(rng.normal(size=(4, 3)))
    b = ad.parameter(rng.normal(size=(3, 2)))
    c = ad.parameter(rng.normal(size=(1, 2)))
    p = ad.parameter(rng.uniform(0.5, 2.0, size=(4, 2)))
    idx = np.array([0, 2, 2, 3, 1])

    def build():
        h = ad.tanh(ad.matmul(a, b) + c)
        h = ad.concat([h, ad.exp(h * 0.3)], axis=1)
        g = ad.take_rows(h, idx)
        s = ad.scatter_add_rows(g, np.array([1, 0, 1, 2, 2]), 3)
        r = ad.relu(ad.columns(s, 1, 3)) + ad.minimum(ad.columns(s, 0, 2), ad.columns(s, 2, 4))
        q = ad.log(p)
        pr = ad.reshape(p, 2, 4)
        w = ad.div(pr, 2.0 + ad.square(pr)) - ad.neg(pr)
        return ad.mean(r) + ad.sum(ad.mean(q, axis=0)) + ad.sum(ad.clip(q, -0.2, 0.4)) + ad.sum(ad.sum(w, axis=1))

    params = [a, b, c, p]
    with Tape() as tape:
        loss = build()
    grads = tape.gradient(loss, params)
    numeric = numeric_grads(lambda: build().item(), params)
    assert max_rel_error(grads, numeric) < 1e-4


def test_two_layer_network_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    net = Mlp(5, (7,), 3, rng, init_w=0.5)
    x = rng.normal(size=(6, 5))

    def loss_fn():
        return ad.mean(ad.square(net(x)))

    with Tape() as tape:
        loss = loss_fn()
    grads = tape.gradient(loss, net.params())
    numeric = numeric_grads(lambda: loss_fn().item(), net.params())
    assert max_rel_error(grads, numeric) < 1e-4


def test_mlp_forward_np_matches_tape_forward():
    rng = np.random.default_rng(2)
    net = Mlp(4, (8, 8), 2, rng, out_activation="tanh")
    x = rng.normal(size=(3, 4))
    np.testing.assert_allclose(net.forward_np(x), net(x).data, rtol=0, atol=1e-15)


# --- Adam -----------------------------------------------------------------


def test_adam_zero_gradient_leaves_params():
    p = ad.parameter(np.array([[1.0, -2.0]]))
    opt = Adam([p], lr=0.1)
    for _ in range(3):
        opt.step([np.zeros((1, 2))])
    assert np.array_equal(p.data, [[1.0, -2.0]])


def test_adam_first_step_moves_by_learning_rate():
    # m_hat = 1, v_hat = 1 after bias correction, so the update is lr / (1 + eps)
    p = ad.parameter(0.0)
    opt = Adam([p], lr=0.001)
    opt.step([np.ones((1, 1))])
    assert p.item() == pytest.approx(-0.001 / (1.0 + 1e-8), abs=1e-15)


def test_adam_is_deterministic():
    rng = np.random.default_rng(3)
    grads = [rng.normal(size=(2, 2)) for _ in range(5)]
    results = []
    for _ in range(2):
        p = ad.parameter(np.ones((2, 2)))
        opt = Adam([p], lr=0.01)
        for g in grads:
            opt.step([g])
        results.append(p.data.copy())
    assert np.array_equal(results[0], results[1])


def test_adam_rejects_shape_mismatch():
    opt = Adam([ad.parameter(np.zeros((2, 2)))])
    with pytest.raises(ValueError):
        opt.step([np.zeros((2, 3))])


# --- Gaussians ------------------------------------------------------------


def _dist(mean, log_std):
    return DiagonalGaussian(ad.Tensor(mean), ad.Tensor(log_std))


def test_reparam_zero_noise_returns_mean():
    d = _dist([[0.3, -1.2]], [[0.1, -0.5]])
    assert np.array_equal(gaussian_sample_reparam(d, np.zeros((1, 2))).data, d.mean.data)


def test_reparam_unit_case():
    d = _dist([[0.0]], [[0.0]])
    assert gaussian_sample_reparam(d, [[1.5]]).item() == 1.5


def test_reparam_log_std_gradient_equals_std():
    log_std = ad.parameter(0.4)
    d = DiagonalGaussian(ad.Tensor(0.2), log_std)
    with Tape() as tape:
        s = gaussian_sample_reparam(d, [[1.0]])
    (g,) = tape.gradient(s, [log_std])
    numeric = numeric_grads(lambda: gaussian_sample_reparam(d, [[1.0]]).item(), [log_std])
    assert g[0, 0] == pytest.approx(math.exp(0.4), rel=1e-12)
    assert max_rel_error([g], numeric) < 1e-4


def test_reparam_noise_shape_checked():
    with pytest.raises(ad.ShapeError):
        gaussian_sample_reparam(_dist([[0.0, 0.0]], [[0.0, 0.0]]), [[1.0]])


def test_log_std_clamped_on_construction():
    d = DiagonalGaussian.from_head(ad.Tensor([[0.0, 0.0, 0.0]]), ad.Tensor([[-30.0, 0.5, 9.0]]))
    assert d.log_std.data.tolist() == [[-20.0, 0.5, 2.0]]


def test_kl_identical_is_exactly_zero():
    d = _dist([[0.3, -1.0, 2.0]], [[0.1, -0.7, 1.1]])
    assert gaussian_kl(d, d).item() == 0.0


def test_kl_unit_shift():
    assert gaussian_kl(_dist([[1.0]], [[0.0]]), _dist([[0.0]], [[0.0]])).item() == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    st.lists(st.floats(-2, 1), min_size=4, max_size=4),
)
def test_kl_non_negative(means, log_stds):
    p = _dist([means[:2]], [log_stds[:2]])
    q = _dist([means[2:]], [log_stds[2:]])
    kl = gaussian_kl(p, q).item()
    # the O(1) terms cancel near p == q, so allow a few ulps below zero
    assert kl >= -1e-12
    gap = max(abs(a - b) for a, b in zip(means[:2] + log_stds[:2], means[2:] + log_stds[2:]))
    if gap > 1e-3:
        assert kl > 0.0


def test_kl_matches_monte_carlo():
    rng = np.random.default_rng(4)
    mp, sp = rng.normal(size=3), rng.uniform(-0.5, 0.5, 3)
    mq, sq = rng.normal(size=3), rng.uniform(-0.5, 0.5, 3)
    x = mp + np.exp(sp) * rng.standard_normal((10**6, 3))

    def logpdf(x, m, s):
        return np.sum(-0.5 * ((x - m) / np.exp(s)) ** 2 - s - 0.5 * np.log(2 * np.pi), axis=1)

    mc = float(np.mean(logpdf(x, mp, sp) - logpdf(x, mq, sq)))
    closed = gaussian_kl(_dist([mp], [sp]), _dist([mq], [sq])).item()
    assert abs(mc - closed) < 1e-2


def test_tanh_logprob_at_origin():
    d = _dist([[0.0]], [[0.0]])
    lp = tanh_gaussian_logprob(d, ad.Tensor([[0.0]])).item()
    expected = math.log(1.0 / math.sqrt(2.0 * math.pi)) - math.log(1.0 + 1e-6)
    assert lp == pytest.approx(expected, abs=1e-12)
    assert lp == pytest.approx(-0.9189, abs=1e-4)


def test_tanh_logprob_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    mean = ad.parameter(rng.normal(size=(3, 2)))
    log_std = ad.parameter(rng.uniform(-1, 0.5, (3, 2)))
    noise = rng.normal(size=(3, 2))

    def loss_fn():
        d = DiagonalGaussian(mean, log_std)
        u = gaussian_sample_reparam(d, noise)
        return ad.sum(tanh_gaussian_logprob(d, u) * ad.Tensor([[1.0], [-0.5], [2.0]]))

    with Tape() as tape:
        loss = loss_fn()
    grads = tape.gradient(loss, [mean, log_std])
    numeric = numeric_grads(lambda: loss_fn().item(), [mean, log_std])
    assert max_rel_error(grads, numeric) < 1e-4


# --- PCA ------------------------------------------------------------------


def test_pca_collinear_points():
    x = np.linspace(-1, 1, 11)
    res = pca_top2(np.column_stack([x, 2 * x]))
    axis = res.axes[0] * np.sign(res.axes[0][0])
    np.testing.assert_allclose(axis, np.array([1.0, 2.0]) / math.sqrt(5.0), atol=1e-12)
    assert res.variances[1] == pytest.approx(0.0, abs=1e-12)
    assert res.rank_deficient
    assert abs(res.axes[0] @ res.axes[1]) < 1e-8


def test_pca_isotropic_variances_equal():
    pts = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
    res = pca_top2(pts)
    assert res.variances[0] == pytest.approx(res.variances[1], rel=1e-10)


def test_pca_rank_two_reconstruction_exact():
    rng = np.random.default_rng(6)
    basis = rng.normal(size=(2, 5))
    coeffs = rng.normal(size=(40, 2)) * np.array([3.0, 1.0])
    data = coeffs @ basis + rng.normal(size=5)
    res = pca_top2(data)
    assert np.max(np.abs(res.back_project(res.projections) - data)) < 1e-8


def test_pca_axes_orthonormal_and_ordered():
    rng = np.random.default_rng(7)
    data = rng.normal(size=(50, 4)) * np.array([4.0, 2.0, 1.0, 0.5])
    res = pca_top2(data)
    np.testing.assert_allclose(np.linalg.norm(res.axes, axis=1), 1.0, atol=1e-12)
    assert abs(res.axes[0] @ res.axes[1]) < 1e-8
    assert res.variances[0] >= res.variances[1]
    top = np.linalg.eigvalsh(np.cov(data.T))[::-1][:2]
    np.testing.assert_allclose(res.variances, top, rtol=1e-6)


def test_pca_requires_enough_rows():
    with pytest.raises(ValueError):
        pca_top2(np.zeros((2, 3)))
