import numpy as np
import pytest


def finite_difference(f, params, step=1e-5):
    """Central-difference gradients of scalar f() w.r.t. each named array.

    Perturbs the live arrays in place and restores them, so ``f`` must read
    the same arrays on every call.
    """
    grads = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = f()
            flat[i] = orig - step
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * step)
        grads[name] = g
    return grads


def assert_grads_close(analytic, numeric, rtol=1e-4, atol=1e-8):
    for name in numeric:
        np.testing.assert_allclose(
            analytic[name], numeric[name], rtol=rtol, atol=atol,
            err_msg=f"gradient mismatch on {name}",
        )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
