"""Finite-difference checks for every graph op.

Each op is verified by perturbing one input entry at a time and comparing
the central difference of a scalar readout (sum of the op output) against
the accumulated gradient.
"""

import numpy as np
import pytest

from trajfield import autodiff as ad

H = 1e-6


def _fd_grad(fn, x, h=H):
    """Central difference of scalar fn w.r.t. every entry of x."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + h
        up = fn(x)
        flat[i] = keep - h
        dn = fn(x)
        flat[i] = keep
        gflat[i] = (up - dn) / (2.0 * h)
    return g


def _check(build, *shapes, seed=0, tol=1e-6):
    """build(*Vars) -> Var; compare backward grads to FD for each input."""
    rng = np.random.default_rng(seed)
    arrays = [rng.standard_normal(s) if s else np.array(rng.standard_normal()) for s in shapes]
    vars_ = [ad.Var(a.copy()) for a in arrays]
    out = ad.sum_all(build(*vars_))
    ad.backward(out)
    for i, a in enumerate(arrays):
        def scalar(x, i=i):
            probe = [v.value for v in vars_]
            probe[i] = x
            return float(ad.sum_all(build(*[ad.Var(p) for p in probe])).value)

        fd = _fd_grad(scalar, a.copy())
        got = vars_[i].grad
        assert got is not None, f"input {i} missing grad"
        err = np.max(np.abs(got - fd) / np.maximum(1.0, np.abs(fd)))
        assert err < tol, f"input {i}: rel err {err:.3e}"


def test_add_sub_mul_broadcast():
    _check(lambda a, b: ad.add(a, b), (3, 4), (4,))
    _check(lambda a, b: ad.sub(a, b), (3, 4), (3, 1))
    _check(lambda a, b: ad.mul(a, b), (2, 3), (3,))


def test_neg_scale():
    _check(lambda a: ad.neg(a), (5,))
    _check(lambda a: ad.scale(a, 2.5), (4, 2))


def test_matmul_all_rank_combinations():
    _check(lambda a, b: ad.matmul(a, b), (3, 4), (4, 2))
    _check(lambda a, b: ad.matmul(a, b), (3, 4), (4,))
    _check(lambda a, b: ad.matmul(a, b), (4,), (4, 2))
    _check(lambda a, b: ad.matmul(a, b), (4,), (4,))


def test_transpose_reshape_rows_concat():
    _check(lambda a: ad.transpose(a), (3, 5))
    _check(lambda a: ad.reshape(a, (6,)), (2, 3))
    _check(lambda a: ad.rows(a, 1, 3), (5, 2))
    _check(lambda a, b: ad.concat([a, b], axis=0), (2, 3), (4, 3))
    _check(lambda a, b: ad.concat([a, b], axis=1), (3, 2), (3, 4))


def test_elementwise_nonlinearities():
    _check(lambda a: ad.sin(a), (4, 3))
    _check(lambda a: ad.cos(a), (4, 3))
    _check(lambda a: ad.tanh(a), (4, 3))
    # keep relu inputs away from the kink
    rng = np.random.default_rng(7)
    a = rng.standard_normal((4, 3))
    a[np.abs(a) < 0.2] = 0.5
    v = ad.Var(a)
    out = ad.sum_all(ad.relu(v))
    ad.backward(out)
    assert np.array_equal(v.grad, (a > 0).astype(float))


def test_step_has_zero_gradient():
    v = ad.Var(np.array([-1.0, 0.5, 2.0]))
    out = ad.sum_all(ad.mul(ad.step(v), v))
    ad.backward(out)
    # d/dv [step(v) * v] with step treated as constant: just the mask
    assert np.array_equal(v.grad, np.array([0.0, 1.0, 1.0]))


def test_reused_node_accumulates():
    # y = x*x + x, dy/dx = 2x + 1
    x = ad.Var(np.array([1.5, -0.5]))
    y = ad.sum_all(ad.add(ad.mul(x, x), x))
    ad.backward(y)
    assert np.allclose(x.grad, 2.0 * x.value + 1.0, rtol=0, atol=1e-12)


def test_backward_requires_scalar_root():
    v = ad.Var(np.ones(3))
    with pytest.raises(ValueError):
        ad.backward(v)


def test_matmul_chain_matches_manual():
    # two-layer linear map: d(sum(B @ (A @ x)))/dx = A^T @ B^T @ ones
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 3))
    B = rng.standard_normal((2, 4))
    x = ad.Var(rng.standard_normal(3))
    out = ad.sum_all(ad.matmul(ad.Var(B), ad.matmul(ad.Var(A), x)))
    ad.backward(out)
    want = A.T @ B.T @ np.ones(2)
    assert np.allclose(x.grad, want, rtol=1e-12, atol=1e-12)
