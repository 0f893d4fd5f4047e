"""
Forward corruption and backward denoising of the diffusion process, with self-guided sampling.

Steps are 1-based: ``t`` runs from 1 to ``schedule.T`` and ``schedule.beta[t - 1]`` is beta_t.
Any array shape is accepted for the state; batched sampling uses shape [n_samples, window].

Denoisers are duck-typed: ``predict(x, t)`` returns the noise estimate and
``input_vjp(x, t, upstream)`` returns J^T upstream, J being the Jacobian of ``predict`` with
respect to ``x``. :class:`pyDiffSchedules.ToyDenoiser` implements both.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pds

from .utils import DomainError, ShapeError, check_finite

logger = logging.getLogger(__name__)

VARIANCES = ('posterior', 'beta')


@dataclass(frozen=True, eq=False)
class NoisyState:
    """
    Diffused state x^t at step t (t = 0 for clean data).
    """
    x: np.ndarray
    t: int


@dataclass(frozen=True, eq=False)
class GuidanceTarget:
    """
    Observations that condition self-guided sampling.

    :param numpy.ndarray x_obs: Observed values, shape [window].
    :param numpy.ndarray mask: Boolean vector, True where the value is observed.
    :param float scale: Guidance scale s >= 0.
    """
    x_obs: np.ndarray
    mask: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        x_obs = np.array(self.x_obs, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if x_obs.shape != mask.shape:
            raise ShapeError("x_obs {0} and mask {1} must have the same shape".format(x_obs.shape, mask.shape))
        if not self.scale >= 0:
            raise DomainError("Guidance scale must be >= 0, got {0}".format(self.scale))
        # unobserved entries may hold placeholders
        x_obs = np.where(mask, x_obs, 0.0)
        object.__setattr__(self, 'x_obs', x_obs)
        object.__setattr__(self, 'mask', mask)
        object.__setattr__(self, 'scale', float(self.scale))

    @property
    def active(self):
        return self.scale > 0 and bool(self.mask.any())


class ZeroNoisePredictor:
    """
    Untrained denoiser returning eps_hat = 0 everywhere.
    """

    def predict(self, x, t):
        return np.zeros_like(np.asarray(x, dtype=float))

    def input_vjp(self, x, t, upstream):
        return np.zeros_like(np.asarray(upstream, dtype=float))


def _check_step(t, schedule):
    if not 1 <= t <= schedule.T:
        raise DomainError("Step t={0} outside [1, {1}]".format(t, schedule.T))


def forward_step(x_prev, t, schedule, rng):
    """
    One corruption step: sqrt(1 - beta_t) x^{t-1} + sqrt(beta_t) z.

    :raise DomainError: If t is outside [1, T].
    """
    _check_step(t, schedule)
    x_prev = np.asarray(x_prev, dtype=float)
    beta = schedule.beta[t - 1]
    return np.sqrt(1.0 - beta) * x_prev + np.sqrt(beta) * rng.standard_normal(x_prev.shape)


def forward_closed(x0, t, schedule, rng, return_noise=False):
    """
    Sample x^t directly from x^0: sqrt(alpha_bar_t) x^0 + sqrt(1 - alpha_bar_t) z.

    :param bool return_noise: Also return the drawn noise z.
    :raise DomainError: If t is outside [1, T].
    """
    _check_step(t, schedule)
    x0 = np.asarray(x0, dtype=float)
    alpha_bar = schedule.alpha_bar[t - 1]
    noise = rng.standard_normal(x0.shape)
    x_t = np.sqrt(alpha_bar) * x0 + np.sqrt(1.0 - alpha_bar) * noise
    if return_noise:
        return x_t, noise
    return x_t


def corrupt_trajectory(x0, schedule, rng):
    """
    Iterate :func:`forward_step` from x^0 to x^T.

    :return: The states x^1..x^T stacked along a new first axis.
    :rtype: numpy.ndarray, shape [T, \\*x0.shape]
    """
    x = np.asarray(x0, dtype=float)
    states = np.empty((schedule.T,) + x.shape)
    for t in range(1, schedule.T + 1):
        x = forward_step(x, t, schedule, rng)
        states[t - 1] = x
    return states


def predict_x0(x_t, eps_hat, t, schedule):
    """
    Invert the closed-form corruption with a noise estimate.

    :raise NumericError: If the reconstruction is not finite.
    """
    _check_step(t, schedule)
    alpha_bar = schedule.alpha_bar[t - 1]
    x0 = (np.asarray(x_t, dtype=float) - np.sqrt(1.0 - alpha_bar) * np.asarray(eps_hat, dtype=float)) / np.sqrt(alpha_bar)
    return check_finite(x0, 'predicted x0', step=t)


def backward_mean(x_t, eps_hat, t, schedule):
    """
    Mean of p(x^{t-1} | x^t): (x^t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t).
    """
    _check_step(t, schedule)
    beta = schedule.beta[t - 1]
    noise_std = np.sqrt(1.0 - schedule.alpha_bar[t - 1])
    # alpha_bar_t rounds to 1 for betas below machine precision; the coefficient tends to sqrt(beta_t) -> 0
    coefficient = np.divide(beta, noise_std, out=np.zeros(()), where=noise_std > 0)
    return (np.asarray(x_t, dtype=float) - coefficient * np.asarray(eps_hat, dtype=float)) \
        / np.sqrt(schedule.alpha[t - 1])


def backward_variance(t, schedule, variance='posterior'):
    """
    sigma_t^2 of the backward transition; 0 at t = 1 in both modes.

    :param str variance: 'posterior' for the alpha_bar-weighted form or 'beta' for raw beta_t.
    """
    if variance not in VARIANCES:
        raise DomainError("Unknown backward variance {0!r}, use one of {1}".format(variance, VARIANCES))
    if t == 1:
        return 0.0
    if variance == 'beta':
        return float(schedule.beta[t - 1])
    return float(schedule.posterior_var[t - 1])


def _add_noise(mean, t, schedule, rng, variance):
    if t == 1:
        return mean
    return mean + np.sqrt(backward_variance(t, schedule, variance)) * rng.standard_normal(mean.shape)


def backward_step(x_t, eps_hat, t, schedule, rng, variance='posterior'):
    """
    One denoising step. No noise is added (and no random number drawn) at t = 1.
    """
    return _add_noise(backward_mean(x_t, eps_hat, t, schedule), t, schedule, rng, variance)


def guidance_log_density(x_t, t, schedule, denoiser, target):
    """
    Gaussian guidance log-density -1/2 ||mask * (x_obs - x0_hat(x^t))||^2, summed over a batch.
    """
    x0 = predict_x0(x_t, denoiser.predict(x_t, t), t, schedule)
    residual = target.mask * (target.x_obs - x0)
    return -0.5 * float(np.sum(residual ** 2))


def guidance_gradient(x_t, t, schedule, denoiser, target):
    """
    Gradient of :func:`guidance_log_density` with respect to x^t, back-propagated through the
    denoiser: (r - sqrt(1 - alpha_bar_t) J^T r) / sqrt(alpha_bar_t), r the masked residual.

    :raise NumericError: If the gradient is not finite.
    """
    x_t = np.asarray(x_t, dtype=float)
    alpha_bar = schedule.alpha_bar[t - 1]
    x0 = predict_x0(x_t, denoiser.predict(x_t, t), t, schedule)
    residual = target.mask * (target.x_obs - x0)
    residual = np.broadcast_to(residual, x_t.shape)
    vjp = denoiser.input_vjp(x_t, t, residual)
    gradient = (residual - np.sqrt(1.0 - alpha_bar) * vjp) / np.sqrt(alpha_bar)
    return check_finite(gradient, 'guidance gradient', step=t)


def guided_backward_step(x_t, denoiser, t, schedule, target, rng, variance='posterior'):
    """
    Self-guided denoising step: the backward mean is shifted by s sigma_t^2 grad log p(x_obs | x^t)
    before the noise is added. With s = 0 or an empty mask this is exactly :func:`backward_step`.
    """
    eps_hat = denoiser.predict(x_t, t)
    if target is None or not target.active:
        return backward_step(x_t, eps_hat, t, schedule, rng, variance)
    mean = backward_mean(x_t, eps_hat, t, schedule)
    shift = target.scale * backward_variance(t, schedule, variance) * \
        guidance_gradient(x_t, t, schedule, denoiser, target)
    return _add_noise(mean + shift, t, schedule, rng, variance)


def sample(denoiser, schedule, window_len, rng, target=None, n_samples=None, variance='posterior',
           return_trajectory=False):
    """
    Draw x^T from a standard normal and denoise it down to x^0.

    :param denoiser: Object exposing ``predict(x, t)`` (and ``input_vjp`` when guided).
    :param Schedule schedule: Noise schedule.
    :param int window_len: Window length L.
    :param numpy.random.Generator rng: Random generator; the sample is a pure function of its state.
    :param GuidanceTarget target: Optional observations for self-guidance.
    :param int n_samples: Batch size; None returns a single window of shape [L].
    :param bool return_trajectory: Return every state as a list of :class:`NoisyState` from t=T to t=0.
    :return: The sample x^0, or the trajectory.
    :raise ShapeError: If the target does not match the window length.
    :raise NumericError: If any intermediate state is not finite.
    """
    if target is not None and target.x_obs.shape != (window_len,):
        raise ShapeError("Guidance target has shape {0}, window is {1}".format(target.x_obs.shape, window_len))
    shape = (window_len,) if n_samples is None else (n_samples, window_len)
    x = rng.standard_normal(shape)
    trajectory = [NoisyState(x, schedule.T)]
    for t in range(schedule.T, 0, -1):
        x = guided_backward_step(x, denoiser, t, schedule, target, rng, variance)
        check_finite(x, 'sampled state', step=t)
        if return_trajectory:
            trajectory.append(NoisyState(x, t - 1))
    logger.debug("Sampled %s windows of length %d with %s", n_samples or 1, window_len, schedule.spec.label)
    if return_trajectory:
        return trajectory
    return x


def trajectory_frame(series_id, trajectory):
    """
    Long-format table (series_id, t, coord_index, value) of a corrupted trajectory x^1..x^T.

    :param str series_id: Identifier written in every row.
    :param numpy.ndarray trajectory: Output of :func:`corrupt_trajectory` for a 1-d series.
    :rtype: pandas.DataFrame
    """
    trajectory = np.asarray(trajectory)
    flat = trajectory.reshape(trajectory.shape[0], -1)
    steps, coords = np.meshgrid(np.arange(1, flat.shape[0] + 1), np.arange(flat.shape[1]), indexing='ij')
    return pds.DataFrame({'series_id': series_id, 't': steps.ravel(), 'coord_index': coords.ravel(),
                          'value': flat.ravel()})
