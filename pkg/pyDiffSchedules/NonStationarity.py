"""
Autocorrelation-based non-stationarity statistics: IAT, IAAT, Lag1AC, VarAC and the multivariate
mIAAT.

The autocorrelation uses the biased estimator (denominator over the full series) computed with
the FFT, so |rho_k| <= 1. Integrated times are truncated adaptively by default: the sum stops
before the first lag that opens a run of three consecutive |rho_k| < 2 / sqrt(n).
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .utils import DomainError, ShapeError

logger = logging.getLogger(__name__)

DEFAULT_MAX_LAG = 100
TRUNCATIONS = ('adaptive', 'fixed')
ADAPTIVE_RUN = 3
_DEGENERATE_TOL = 1e-24


@dataclass(frozen=True, eq=False)
class AcfProfile:
    """
    Autocorrelations rho_1..rho_K of a series of length n.

    :param numpy.ndarray rho: rho_1..rho_K.
    :param int n: Length of the series.
    :param bool degenerate: True when the series is constant and the profile was set to zero.
    """
    rho: np.ndarray
    n: int
    degenerate: bool = False

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float).reshape(-1)
        if rho.size > max(self.n - 1, 0):
            raise DomainError("A series of length {0} has at most {1} lags".format(self.n, self.n - 1))
        if np.any(np.abs(rho) > 1 + 1e-9):
            raise DomainError("Autocorrelations must lie in [-1, 1]")
        rho.setflags(write=False)
        object.__setattr__(self, 'rho', rho)

    @property
    def K(self):
        return self.rho.size


def _default_max_lag(n, max_lag):
    if n < 2:
        raise DomainError("Autocorrelation needs at least 2 observations, got {0}".format(n))
    if max_lag is None:
        return min(n - 1, DEFAULT_MAX_LAG)
    if not 1 <= max_lag <= n - 1:
        raise DomainError("max_lag must lie in [1, {0}], got {1}".format(n - 1, max_lag))
    return int(max_lag)


def _acf_rows(X, max_lag):
    """
    Biased autocorrelations of every row of X, lags 1..max_lag, plus a per-row degeneracy flag.
    """
    n = X.shape[-1]
    centered = X - X.mean(axis=-1, keepdims=True)
    size = fft.next_fast_len(2 * n)
    spectrum = fft.rfft(centered, n=size, axis=-1)
    acov = fft.irfft(spectrum * np.conjugate(spectrum), n=size, axis=-1)[..., :max_lag + 1]
    scale = np.max(np.abs(X), axis=-1) if X.size else np.zeros(X.shape[:-1])
    degenerate = acov[..., 0] <= _DEGENERATE_TOL * n * scale ** 2
    denominator = np.where(degenerate, 1.0, acov[..., 0])
    rho = acov[..., 1:] / denominator[..., np.newaxis]
    rho[degenerate] = 0.0
    return rho, degenerate


def _truncation_mask(rho, n, truncation):
    """
    Boolean mask over the lags of each row of ``rho`` that enter the integrated times.
    """
    if truncation not in TRUNCATIONS:
        raise DomainError("Unknown truncation {0!r}, use one of {1}".format(truncation, TRUNCATIONS))
    rho = np.atleast_2d(rho)
    K = rho.shape[-1]
    if truncation == 'fixed' or K < ADAPTIVE_RUN:
        return np.ones(rho.shape, dtype=bool)
    small = np.abs(rho) < 2.0 / np.sqrt(n)
    run = small[:, :K - ADAPTIVE_RUN + 1].copy()
    for offset in range(1, ADAPTIVE_RUN):
        run &= small[:, offset:K - ADAPTIVE_RUN + 1 + offset]
    cut = np.where(run.any(axis=1), np.argmax(run, axis=1), K)
    return np.arange(K)[np.newaxis, :] < cut[:, np.newaxis]


def truncation_lag(profile, truncation='adaptive'):
    """
    Number of lags kept by the truncation rule.
    """
    return int(_truncation_mask(profile.rho[np.newaxis, :], profile.n, truncation).sum())


def autocorrelation(series, max_lag=None):
    """
    Biased sample autocorrelation

    rho_k = sum_{t=1}^{n-k} (x_t - mean)(x_{t+k} - mean) / sum_{t=1}^{n} (x_t - mean)^2

    :param series: Univariate series (array or :class:`TimeSeries`).
    :param int max_lag: Largest lag, default min(n - 1, 100).
    :return: The profile; constant series give an all-zero profile flagged ``degenerate``.
    :rtype: AcfProfile
    :raise DomainError: If n < 2 or max_lag lies outside [1, n - 1].
    """
    values = np.asarray(getattr(series, 'values', series), dtype=float)
    if values.ndim != 1:
        raise ShapeError("autocorrelation expects a univariate series")
    n = values.size
    max_lag = _default_max_lag(n, max_lag)
    rho, degenerate = _acf_rows(values[np.newaxis, :], max_lag)
    if degenerate[0]:
        logger.warning("Constant series: autocorrelation set to zero")
    return AcfProfile(rho[0], n, bool(degenerate[0]))


def iat(profile, truncation='adaptive'):
    """
    Integrated autocorrelation time 1 + 2 sum_k rho_k.
    """
    mask = _truncation_mask(profile.rho[np.newaxis, :], profile.n, truncation)[0]
    return 1.0 + 2.0 * float(np.sum(profile.rho[mask]))


def iaat(profile, truncation='adaptive'):
    """
    Integrated absolute autocorrelation time 1 + 2 sum_k |rho_k|; never smaller than :func:`iat`.
    """
    mask = _truncation_mask(profile.rho[np.newaxis, :], profile.n, truncation)[0]
    return 1.0 + 2.0 * float(np.sum(np.abs(profile.rho[mask])))


def lag1ac(series, full_output=False):
    """
    Lag-one autocorrelation rho_1.

    :param bool full_output: Also return the degeneracy flag.
    """
    profile = autocorrelation(series, max_lag=1)
    if full_output:
        return float(profile.rho[0]), profile.degenerate
    return float(profile.rho[0])


def varac(profile):
    """
    Population variance of rho_1..rho_K.

    :raise DomainError: If the profile is empty.
    """
    if profile.K < 1:
        raise DomainError("varac needs at least one lag")
    return float(np.var(profile.rho))


def _cross_correlations(X, max_lag):
    """
    rho^{(i,j)}_k for lags 1..max_lag of the channels of X [d, n], shape [d, d, max_lag], and the
    per-channel sums of squares.
    """
    n = X.shape[-1]
    centered = X - X.mean(axis=-1, keepdims=True)
    size = fft.next_fast_len(2 * n)
    spectrum = fft.rfft(centered, n=size, axis=-1)
    # sum_t c_i[t] c_j[t + k]
    cross = fft.irfft(np.conjugate(spectrum)[:, np.newaxis, :] * spectrum[np.newaxis, :, :], n=size, axis=-1)
    cross = cross[..., 1:max_lag + 1]
    sums = np.sum(centered ** 2, axis=-1)
    constant = sums <= _DEGENERATE_TOL * n * np.max(np.abs(X), axis=-1) ** 2
    norms = np.sqrt(np.where(constant, 1.0, sums))
    rho = cross / (norms[:, np.newaxis, np.newaxis] * norms[np.newaxis, :, np.newaxis])
    rho[constant, :, :] = 0.0
    rho[:, constant, :] = 0.0
    return rho, np.where(constant, 0.0, sums), constant


def miaat(mv_series, max_lag=None, absolute=False, full_output=False):
    """
    Variance-weighted multivariate integrated autocorrelation time.

    Each channel i gets tau_i = 1 + 2 sum_k sum_j rho^{(i,j)}_k using the cross-correlations
    normalized by sqrt(S_i S_j); the result is sum_i sigma_i^2 tau_i / sum_i sigma_i^2.
    The sum is signed as written; ``absolute=True`` sums |rho^{(i,j)}_k| instead.

    :param mv_series: Channel-major array [d, n] (or :class:`TimeSeries`).
    :param int max_lag: Largest lag, default min(n - 1, 100); no adaptive truncation.
    :param bool full_output: Also return the degeneracy flag (any constant channel).
    """
    X = np.asarray(getattr(mv_series, 'values', mv_series), dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim != 2:
        raise ShapeError("miaat expects a channel-major array [d, n]")
    max_lag = _default_max_lag(X.shape[-1], max_lag)
    rho, weights, constant = _cross_correlations(X, max_lag)
    terms = np.abs(rho) if absolute else rho
    tau = 1.0 + 2.0 * terms.sum(axis=(1, 2))
    degenerate = bool(constant.any())
    if degenerate:
        logger.warning("Constant channels %s: cross-correlation terms set to zero", np.flatnonzero(constant).tolist())
    if weights.sum() == 0:
        value = 1.0
    else:
        value = float(np.sum(weights * tau) / np.sum(weights))
    if full_output:
        return value, degenerate
    return value


def _univariate(reducer, fixed=False):
    def evaluate(X, max_lag=None, truncation='adaptive'):
        n = X.shape[-1]
        lag = _default_max_lag(n, max_lag)
        rows = X.reshape(-1, n)
        rho, degenerate = _acf_rows(rows, lag)
        mask = _truncation_mask(rho, n, 'fixed' if fixed else truncation)
        values = reducer(rho, mask)
        if X.ndim == 3:
            d = X.shape[1]
            return values.reshape(-1, d).mean(axis=1), degenerate.reshape(-1, d).all(axis=1)
        return values, degenerate
    return evaluate


def _miaat_rows(X, max_lag=None, truncation='adaptive', absolute=False):
    if X.ndim == 2:
        X = X[:, np.newaxis, :]
    outputs = [miaat(record, max_lag=max_lag, absolute=absolute, full_output=True) for record in X]
    return np.array([o[0] for o in outputs]), np.array([o[1] for o in outputs], dtype=bool)


STATISTICS = {
    'iaat': _univariate(lambda rho, mask: 1.0 + 2.0 * np.sum(np.abs(rho) * mask, axis=1)),
    'iat': _univariate(lambda rho, mask: 1.0 + 2.0 * np.sum(rho * mask, axis=1)),
    'lag1ac': _univariate(lambda rho, mask: rho[:, 0].copy(), fixed=True),
    'varac': _univariate(lambda rho, mask: np.var(rho, axis=1), fixed=True),
    'miaat': _miaat_rows,
}

STATISTIC_FLOORS = {'iaat': 1.0, 'iat': None, 'lag1ac': None, 'varac': 0.0, 'miaat': None}


def evaluate_statistic(name, array, max_lag=None, truncation='adaptive'):
    """
    Evaluate a registered statistic on a batch of series.

    :param str name: One of 'iaat', 'iat', 'lag1ac', 'varac', 'miaat'.
    :param numpy.ndarray array: [n] for one series, [m, n] for m univariate series or [m, d, n] for
        m multivariate records. Univariate statistics are averaged over channels of multivariate records.
    :param int max_lag: Largest lag, default min(n - 1, 100).
    :param str truncation: 'adaptive' or 'fixed' (IAT and IAAT only).
    :return: Statistic values [m] and degeneracy flags [m].
    :rtype: tuple(numpy.ndarray, numpy.ndarray)
    :raise DomainError: If the statistic name is unknown.
    """
    if name not in STATISTICS:
        raise DomainError("Unknown statistic {0!r}, use one of {1}".format(name, sorted(STATISTICS)))
    X = np.asarray(array, dtype=float)
    if X.ndim == 1:
        X = X[np.newaxis, :]
    if X.ndim not in (2, 3):
        raise ShapeError("Statistic input must be [n], [m, n] or [m, d, n], got {0}".format(X.shape))
    return STATISTICS[name](X, max_lag=max_lag, truncation=truncation)
