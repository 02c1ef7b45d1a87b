"""Parameter update rules and the finite-difference gradient checker.

Optimizers mutate parameter arrays in place.  State tensors are allocated
lazily on the first step and stay shape-congruent with their parameters.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteLossError, ShapeMismatchError


class Optimizer:
    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        self.learning_rate = learning_rate
        self.step_count = 0

    def _check(self, params, grads):
        if len(params) != len(grads):
            raise ShapeMismatchError("parameter and gradient lists differ in length")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ShapeMismatchError(
                    f"parameter shape {p.shape} != gradient shape {g.shape}"
                )

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self._check(params, grads)
        self.step_count += 1
        self._update(params, grads)

    def _update(self, params, grads):
        raise NotImplementedError

    @staticmethod
    def _grow(state: list[np.ndarray] | None, params) -> list[np.ndarray]:
        """Extend per-parameter state so every position has a buffer; state
        is keyed by list position, which the training loop keeps stable."""
        if state is None:
            state = []
        while len(state) < len(params):
            state.append(np.zeros_like(params[len(state)]))
        return state


class SGD(Optimizer):
    def _update(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.learning_rate * g


class Adam(Optimizer):
    def __init__(self, learning_rate: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None

    def _update(self, params, grads):
        self.m = self._grow(self.m, params)
        self.v = self._grow(self.v, params)
        t = self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


class RMSprop(Optimizer):
    def __init__(self, learning_rate: float, rho: float = 0.9, eps: float = 1e-8):
        super().__init__(learning_rate)
        self.rho = rho
        self.eps = eps
        self.mean_square: list[np.ndarray] | None = None

    def _update(self, params, grads):
        self.mean_square = self._grow(self.mean_square, params)
        for p, g, ms in zip(params, grads, self.mean_square):
            ms *= self.rho
            ms += (1.0 - self.rho) * g * g
            p -= self.learning_rate * g / (np.sqrt(ms) + self.eps)


class Adagrad(Optimizer):
    def __init__(self, learning_rate: float, eps: float = 1e-8):
        super().__init__(learning_rate)
        self.eps = eps
        self.accum: list[np.ndarray] | None = None

    def _update(self, params, grads):
        self.accum = self._grow(self.accum, params)
        for p, g, a in zip(params, grads, self.accum):
            a += g * g
            p -= self.learning_rate * g / (np.sqrt(a) + self.eps)


OPTIMIZERS = {"sgd": SGD, "adam": Adam, "rmsprop": RMSprop, "adagrad": Adagrad}


def make_optimizer(name: str, learning_rate: float) -> Optimizer:
    try:
        cls = OPTIMIZERS[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown optimizer {name!r}; choose from {sorted(OPTIMIZERS)}"
        ) from None
    return cls(learning_rate)


def clip_gradients(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale all gradients jointly so their global L2 norm is <= max_norm.

    Returns the pre-clip norm.
    """
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in grads:
            g *= scale
    return total


def gradient_check(
    loss_fn,
    params: list[np.ndarray],
    analytic_grads: list[np.ndarray],
    step: float = 1e-5,
    max_coords: int = 50,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients against central finite differences.

    loss_fn takes no arguments and evaluates the scalar loss at the current
    parameter values; it must be deterministic.  For tensors larger than
    max_coords a random subset of coordinates is probed.  Returns the maximum
    relative error |a - n| / max(|a|, |n|, 1e-12) across probed coordinates.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for p, a in zip(params, analytic_grads):
        if p.shape != a.shape:
            raise ShapeMismatchError(
                f"parameter shape {p.shape} != gradient shape {a.shape}"
            )
        flat = p.ravel()
        n = flat.size
        if n > max_coords:
            coords = rng.choice(n, size=max_coords, replace=False)
        else:
            coords = np.arange(n)
        a_flat = a.ravel()
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + step
            f_plus = float(loss_fn())
            flat[idx] = original - step
            f_minus = float(loss_fn())
            flat[idx] = original
            if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
                raise NonFiniteLossError(
                    f"loss not finite near coordinate {idx} of shape {p.shape}"
                )
            numeric = (f_plus - f_minus) / (2.0 * step)
            analytic = float(a_flat[idx])
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-12)
            worst = max(worst, err)
    return worst
