import numpy as np
import pytest

from vulncascade.optim import gradient_check


def layer_grad_error(layer, x, seed=0, training=True, check_input=True,
                     step=1e-5):
    """Max relative error between a layer's analytic gradients and central
    finite differences, for both parameters and (optionally) the input.

    The scalar loss is a fixed random linear functional of the output, which
    exercises every output coordinate without hiding sign errors.
    """
    x = np.asarray(x)
    if x.dtype.kind == "f":
        x = x.astype(np.float64)
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(np.asarray(layer.forward(x, training=training)).shape)

    def loss_fn():
        return float(np.sum(layer.forward(x, training=training) * w))

    layer.zero_grad()
    layer.forward(x, training=training)
    dx = layer.backward(w)
    params = [arr for _, arr in layer.params()]
    grads = [arr for _, arr in layer.grads()]
    if check_input:
        params.append(x)
        grads.append(np.asarray(dx))
    return gradient_check(loss_fn, params, grads, step=step, rng=rng)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
