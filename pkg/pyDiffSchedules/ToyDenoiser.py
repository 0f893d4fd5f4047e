"""
Small noise-prediction network trained with the diffusion objective, with hand-written
back-propagation so that gradients with respect to both the parameters and the input are exact.

Architecture: [x_t, DE(t)] -> Linear -> ReLU -> Linear -> ReLU -> Linear -> eps_hat, where DE is an
optional sinusoidal diffusion-step embedding concatenated to the input window.
"""

import json
import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pds
from sklearn.base import BaseEstimator

from .DiffusionProcess import forward_closed
from .TimeSeriesDataset import windows
from .utils import DivergenceError, DomainError, NumericError, ShapeError, check_finite

logger = logging.getLogger(__name__)

LAYERS = ('W1', 'b1', 'W2', 'b2', 'W3', 'b3')
DIVERGENCE_LOSS = 1e6
EMBEDDING_BASE = 10000.0


@dataclass(frozen=True)
class DenoiserConfig:
    """
    Training configuration of the toy denoiser.
    """
    window: int = 32
    h: int = 64
    embedding: bool = True
    embedding_dim: int = 32
    lr: float = 1e-3
    steps: int = 1000
    batch: int = 64
    seed: int = 0


@dataclass(frozen=True, eq=False)
class DenoiserParams:
    """
    Weights of the MLP. Row-vector convention: z = x @ W + b.

    :param dict layers: Arrays W1 [L + E, h], b1 [h], W2 [h, h], b2 [h], W3 [h, L], b3 [L].
    :param int window: Window length L.
    :param bool embedding: Whether the step embedding (dimension E) is concatenated to the input.
    :param int embedding_dim: E; ignored when the embedding is disabled.
    """
    layers: dict
    window: int
    embedding: bool = True
    embedding_dim: int = 32

    def __post_init__(self):
        layers = {name: np.array(self.layers[name], dtype=float) for name in LAYERS}
        n_in = self.window + (self.embedding_dim if self.embedding else 0)
        h = layers['b1'].size
        expected = {'W1': (n_in, h), 'b1': (h,), 'W2': (h, h), 'b2': (h,), 'W3': (h, self.window),
                    'b3': (self.window,)}
        for name in LAYERS:
            if layers[name].shape != expected[name]:
                raise ShapeError("Layer {0} has shape {1}, expected {2}".format(name, layers[name].shape,
                                                                                expected[name]))
            if not np.all(np.isfinite(layers[name])):
                raise NumericError("Layer {0} has non-finite values".format(name))
        object.__setattr__(self, 'layers', layers)

    @property
    def h(self):
        return self.layers['b1'].size

    def with_layers(self, layers):
        return replace(self, layers=layers)

    def to_dict(self):
        return {'window': self.window, 'h': self.h,
                'embedding': {'enabled': self.embedding, 'dim': self.embedding_dim},
                'layers': {name: {'shape': list(self.layers[name].shape),
                                  'data': self.layers[name].ravel().tolist()} for name in LAYERS}}

    @classmethod
    def from_dict(cls, payload):
        layers = {name: np.array(entry['data'], dtype=float).reshape(entry['shape'])
                  for name, entry in payload['layers'].items()}
        return cls(layers, payload['window'], payload['embedding']['enabled'], payload['embedding']['dim'])


def step_embedding(t, dim=32):
    """
    Sinusoidal step embedding: component 2i is sin(t / 10000^(2i/dim)) and 2i+1 the cosine.

    :param t: Step (scalar) or steps (1-d array), t >= 0.
    :param int dim: Even embedding size.
    :return: Embedding [dim], or [len(t), dim] for an array of steps.
    :raise DomainError: If dim is odd or a step is negative.
    """
    if dim % 2 != 0 or dim < 2:
        raise DomainError("Embedding dimension must be a positive even number, got {0}".format(dim))
    steps = np.asarray(t, dtype=float)
    if np.any(steps < 0):
        raise DomainError("Steps must be >= 0")
    frequencies = EMBEDDING_BASE ** (-np.arange(0, dim, 2) / dim)
    angles = steps[..., np.newaxis] * frequencies
    out = np.empty(steps.shape + (dim,))
    out[..., 0::2] = np.sin(angles)
    out[..., 1::2] = np.cos(angles)
    return out


def init_params(window, h=64, embedding=True, embedding_dim=32, rng=None):
    """
    He initialization (normal, variance 2 / fan_in) with zero biases.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n_in = window + (embedding_dim if embedding else 0)
    shapes = {'W1': (n_in, h), 'W2': (h, h), 'W3': (h, window)}
    layers = {}
    for name in ('W1', 'W2', 'W3'):
        layers[name] = rng.standard_normal(shapes[name]) * np.sqrt(2.0 / shapes[name][0])
    layers['b1'] = np.zeros(h)
    layers['b2'] = np.zeros(h)
    layers['b3'] = np.zeros(window)
    return DenoiserParams(layers, window, embedding, embedding_dim)


def _network_input(params, x_t, t):
    x = np.asarray(x_t, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != params.window:
        raise ShapeError("Denoiser expects windows of length {0}, got shape {1}".format(params.window,
                                                                                       np.shape(x_t)))
    if params.embedding:
        steps = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
        x = np.hstack([x, step_embedding(steps, params.embedding_dim)])
    return x, single


def _forward_memory(params, x_t, t):
    inputs, single = _network_input(params, x_t, t)
    layers = params.layers
    z1 = inputs @ layers['W1'] + layers['b1']
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ layers['W2'] + layers['b2']
    a2 = np.maximum(z2, 0.0)
    out = a2 @ layers['W3'] + layers['b3']
    return out, (inputs, z1, a1, z2, a2), single


def _backward(params, memory, d_out):
    """
    Gradients of <d_out, network output> with respect to the parameters and to the network input.
    """
    inputs, z1, a1, z2, a2 = memory
    layers = params.layers
    grads = {'W3': a2.T @ d_out, 'b3': d_out.sum(axis=0)}
    dz2 = (d_out @ layers['W3'].T) * (z2 > 0)
    grads['W2'] = a1.T @ dz2
    grads['b2'] = dz2.sum(axis=0)
    dz1 = (dz2 @ layers['W2'].T) * (z1 > 0)
    grads['W1'] = inputs.T @ dz1
    grads['b1'] = dz1.sum(axis=0)
    return grads, dz1 @ layers['W1'].T


def forward(params, x_t, t):
    """
    Noise estimate eps_hat(x_t, t). With the embedding disabled the output does not depend on t.

    :param x_t: Window [L] or batch [B, L].
    :param t: Step, or per-row steps [B].
    :raise ShapeError: If the window length does not match the parameters.
    """
    out, _, single = _forward_memory(params, x_t, t)
    return out[0] if single else out


def input_vjp(params, x_t, t, upstream):
    """
    J^T upstream, J the Jacobian of :func:`forward` with respect to x_t.
    """
    _, memory, single = _forward_memory(params, x_t, t)
    _, d_inputs = _backward(params, memory, np.atleast_2d(np.asarray(upstream, dtype=float)))
    dx = d_inputs[:, :params.window]
    return dx[0] if single else dx


def _mse_and_grads(params, x_t, t, eps):
    """
    Mean squared error of the noise estimate against ``eps`` and its exact parameter gradients.
    """
    out, memory, _ = _forward_memory(params, x_t, t)
    eps = np.atleast_2d(np.asarray(eps, dtype=float))
    residual = out - eps
    loss = float(np.mean(residual ** 2))
    grads, _ = _backward(params, memory, 2.0 * residual / residual.size)
    return loss, grads


def draw_training_batch(x0, schedule, rng):
    """
    Steps t uniform in [1, T], noise and corrupted windows x^t for a batch of clean windows.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    steps = rng.integers(1, schedule.T + 1, size=x0.shape[0])
    x_t = np.empty_like(x0)
    eps = np.empty_like(x0)
    for i, t in enumerate(steps):
        x_t[i], eps[i] = forward_closed(x0[i], int(t), schedule, rng, return_noise=True)
    return x_t, steps, eps


def loss_and_grads(params, x0_batch, schedule, rng):
    """
    Diffusion training loss E ||eps - eps_theta(x^t, t)||^2 on a batch and its parameter gradients.

    :raise DomainError: If the batch is empty.
    :raise NumericError: If the loss is not finite.
    """
    if np.size(x0_batch) == 0:
        raise DomainError("Empty training batch")
    x_t, steps, eps = draw_training_batch(x0_batch, schedule, rng)
    loss, grads = _mse_and_grads(params, x_t, steps, eps)
    if not np.isfinite(loss):
        raise NumericError("Non-finite training loss")
    return loss, grads


class AdamOptimizer:
    """
    Adam update rule on dictionaries of arrays.
    """

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = None
        self._v = None
        self._count = 0

    def step(self, layers, grads):
        if self._m is None:
            self._m = {name: np.zeros_like(value) for name, value in layers.items()}
            self._v = {name: np.zeros_like(value) for name, value in layers.items()}
        self._count += 1
        updated = {}
        for name, value in layers.items():
            self._m[name] = self.beta1 * self._m[name] + (1 - self.beta1) * grads[name]
            self._v[name] = self.beta2 * self._v[name] + (1 - self.beta2) * grads[name] ** 2
            m_hat = self._m[name] / (1 - self.beta1 ** self._count)
            v_hat = self._v[name] / (1 - self.beta2 ** self._count)
            updated[name] = value - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated


def _training_streams(seed):
    # separate init and data streams: runs that only differ in the embedding see the same batches
    init_seed, data_seed = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seed), np.random.default_rng(data_seed)


def train(dataset, schedule, config=DenoiserConfig()):
    """
    Train a toy denoiser with Adam on random windows of the mean-scaled dataset.

    :param Dataset dataset: Univariate training series, each at least ``config.window`` long.
    :param Schedule schedule: Noise schedule.
    :param DenoiserConfig config: Training configuration.
    :return: Final parameters and the loss trace.
    :rtype: tuple(DenoiserParams, list)
    :raise DivergenceError: If the loss exceeds 1e6.
    """
    if dataset.d != 1:
        raise ShapeError("The toy denoiser handles univariate datasets only")
    init_rng, data_rng = _training_streams(config.seed)
    params = init_params(config.window, config.h, config.embedding, config.embedding_dim, init_rng)
    optimizer = AdamOptimizer(lr=config.lr)
    scaled = dataset.scaled()
    trace = []
    for step in range(config.steps):
        batch = windows(scaled, config.window, config.batch, data_rng)
        loss, grads = loss_and_grads(params, batch, schedule, data_rng)
        trace.append(loss)
        if loss > DIVERGENCE_LOSS:
            raise DivergenceError("Training diverged at step {0} (loss {1:.3g})".format(step, loss), step=step,
                                  trace=trace)
        params = params.with_layers(optimizer.step(params.layers, grads))
        if step % 500 == 0:
            logger.debug("step %d loss %.5f", step, loss)
    return params, trace


def smoothed_loss(trace, fraction=0.1):
    """
    Mean of the last ``fraction`` of a loss trace.
    """
    if len(trace) == 0:
        return float('nan')
    count = max(1, int(round(fraction * len(trace))))
    return float(pds.Series(trace).iloc[-count:].mean())


class ToyDenoiser(BaseEstimator):
    """

    ToyDenoiser object - MLP noise predictor for diffusion models of time series windows.

    :param int window: Window length.
    :param int h: Hidden width.
    :param bool embedding: Concatenate the sinusoidal step embedding to the input.
    :param int embedding_dim: Embedding size (even).
    :param float lr: Adam learning rate.
    :param int steps: Training iterations.
    :param int batch: Windows per iteration.
    :param int random_state: Seed.
    """

    def __init__(self, window=32, h=64, embedding=True, embedding_dim=32, lr=1e-3, steps=1000, batch=64,
                 random_state=0):
        self.window = window
        self.h = h
        self.embedding = embedding
        self.embedding_dim = embedding_dim
        self.lr = lr
        self.steps = steps
        self.batch = batch
        self.random_state = random_state
        self.params_ = None
        self.loss_trace_ = None
        self.schedule_ = None
        self._isfitted = False

    @property
    def config(self):
        return DenoiserConfig(self.window, self.h, self.embedding, self.embedding_dim, self.lr, self.steps,
                              self.batch, self.random_state)

    def fit(self, dataset, schedule):
        """

        Train on a dataset under a schedule.

        :return: Fitted denoiser.
        :rtype: pyDiffSchedules.ToyDenoiser
        :raise DivergenceError: If training diverges.
        """
        try:
            self.params_, self.loss_trace_ = train(dataset, schedule, self.config)
            self.schedule_ = schedule
            self._isfitted = True
            logger.info("Trained denoiser on %r with %s: smoothed loss %.5f", dataset.name, schedule.spec.label,
                        smoothed_loss(self.loss_trace_))
            return self
        except DivergenceError as diverr:
            self.loss_trace_ = diverr.trace
            raise diverr

    def _check_fitted(self):
        if self._isfitted is False:
            raise AttributeError("Denoiser is not fitted")

    def predict(self, x, t):
        self._check_fitted()
        return forward(self.params_, x, t)

    def input_vjp(self, x, t, upstream):
        self._check_fitted()
        return input_vjp(self.params_, x, t, upstream)

    def eval_loss(self, x0_windows, schedule=None, seed=0):
        """

        Diffusion loss on fixed windows with a (t, eps) draw that depends only on ``seed``.
        """
        self._check_fitted()
        schedule = self.schedule_ if schedule is None else schedule
        x_t, steps, eps = draw_training_batch(x0_windows, schedule, np.random.default_rng(seed))
        loss, _ = _mse_and_grads(self.params_, x_t, steps, eps)
        return check_finite(np.array(loss), 'evaluation loss').item()

    def save(self, path):
        self._check_fitted()
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(self.params_.to_dict(), handle)

    def save_trace(self, path):
        pds.DataFrame({'step': np.arange(len(self.loss_trace_)), 'loss': self.loss_trace_}).to_csv(
            path, index=False, float_format='%.12g')

    @classmethod
    def load(cls, path, schedule=None):
        """

        Rebuild a fitted denoiser from a parameter file written by :meth:`save`.
        """
        with open(path, 'r', encoding='utf-8') as handle:
            params = DenoiserParams.from_dict(json.load(handle))
        model = cls(window=params.window, h=params.h, embedding=params.embedding,
                    embedding_dim=params.embedding_dim)
        model.params_ = params
        model.schedule_ = schedule
        model._isfitted = True
        return model
