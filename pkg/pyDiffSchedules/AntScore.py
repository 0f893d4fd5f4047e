"""
Non-stationarity curves and the ANT score.

A schedule is scored by corrupting every (mean-scaled) series of a dataset along the schedule,
recording a non-stationarity statistic at each step, and comparing the min-max normalized curve
with the straight line from 1 to 0:

    score = lambda_linear * lambda_noise * lambda_step
    lambda_linear = d(l*, normalized curve)
    lambda_noise = 1 + l^(T) / l^(1)
    lambda_step = 1 + 1 / T

Lower scores are better.
"""

import json
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pds
from joblib import Parallel, delayed
from scipy import integrate, stats
from sklearn.metrics import mean_absolute_error, mean_squared_error, r2_score

from .DiffusionProcess import corrupt_trajectory
from .NoiseSchedule import build_schedule
from .NonStationarity import STATISTIC_FLOORS, evaluate_statistic
from .utils import DomainError, derive_rng

logger = logging.getLogger(__name__)

METRICS = ('auc', 'mse', 'mae', 'corr', 'r2')
DEFAULT_STATISTIC = 'iaat'
DEFAULT_METRIC = 'auc'


@dataclass(frozen=True, eq=False)
class NonStationarityCurve:
    """
    Mean statistic l^(1)..l^(T) of the corrupted data along a schedule.

    :param numpy.ndarray values: Curve values, length T.
    :param str statistic: Statistic name.
    :param ScheduleSpec spec: Schedule the curve was computed with (None for hand-built curves).
    :param int draws: Trajectories per series.
    """
    values: np.ndarray
    statistic: str = DEFAULT_STATISTIC
    spec: object = None
    draws: int = 1

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise DomainError("Curve values must be finite and non-empty")
        if self.spec is not None and values.size != self.spec.T:
            raise DomainError("Curve has {0} values for T={1}".format(values.size, self.spec.T))
        floor = STATISTIC_FLOORS.get(self.statistic)
        if floor is not None and np.any(values < floor - 1e-9):
            raise DomainError("{0} curve below its floor {1}".format(self.statistic, floor))
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def T(self):
        return self.values.size

    @property
    def progress(self):
        """
        Step positions rescaled to [0, 1]: (t - 1) / (T - 1).
        """
        if self.T == 1:
            return np.zeros(1)
        return np.linspace(0.0, 1.0, self.T)


@dataclass(frozen=True, eq=False)
class AntScore:
    """
    The three factors of the ANT score and their product.
    """
    lambda_linear: float
    lambda_noise: float
    lambda_step: float
    score: float
    metric: str = DEFAULT_METRIC
    spec: object = None
    degenerate: bool = False

    def to_dict(self):
        return {'spec': self.spec.to_string() if self.spec is not None else None,
                'label': self.spec.label if self.spec is not None else None,
                'lambda_linear': self.lambda_linear, 'lambda_noise': self.lambda_noise,
                'lambda_step': self.lambda_step, 'score': self.score}


def _series_curve(index, values, schedule, statistic, draws, master_seed, max_lag, truncation):
    """
    Statistic of x^1..x^T for every draw of one series, shape [draws, T], and the degeneracy flags.
    """
    out = np.empty((draws, schedule.T))
    flags = np.empty((draws, schedule.T), dtype=bool)
    for draw in range(draws):
        rng = derive_rng(master_seed, index, draw)
        trajectory = corrupt_trajectory(values, schedule, rng)
        out[draw], flags[draw] = evaluate_statistic(statistic, trajectory, max_lag=max_lag, truncation=truncation)
    return out, flags


def curve(dataset, schedule, statistic=DEFAULT_STATISTIC, draws=1, master_seed=0, n_jobs=1, max_lag=None,
          truncation='adaptive'):
    """
    Non-stationarity curve of a dataset under a schedule.

    Every series is mean-scaled, then corrupted ``draws`` times with the generator keyed by
    (master_seed, series index, draw index); l^(t) is the mean statistic over all (series, draw)
    pairs. The result does not depend on ``n_jobs``.

    :param Dataset dataset: Data to corrupt.
    :param schedule: :class:`Schedule` or :class:`ScheduleSpec`.
    :param str statistic: Registered statistic name.
    :param int draws: Trajectories per series, >= 1.
    :param int master_seed: Master seed.
    :param int n_jobs: joblib workers over series.
    :rtype: NonStationarityCurve
    :raise DomainError: If draws < 1, or if the statistic is degenerate for every series at some step.
    """
    if draws < 1:
        raise DomainError("draws must be >= 1, got {0}".format(draws))
    if not hasattr(schedule, 'beta'):
        schedule = build_schedule(schedule)
    scaled = dataset.scaled()
    results = Parallel(n_jobs=n_jobs)(
        delayed(_series_curve)(i, ts.values, schedule, statistic, draws, master_seed, max_lag, truncation)
        for i, ts in enumerate(scaled.series))
    values = np.concatenate([r[0] for r in results], axis=0)
    flags = np.concatenate([r[1] for r in results], axis=0)

    all_degenerate = np.flatnonzero(flags.all(axis=0))
    if all_degenerate.size > 0:
        raise DomainError("Statistic {0!r} is degenerate for every series at step t={1}".format(
            statistic, int(all_degenerate[0]) + 1))
    logger.debug("Curve of %s on %r with %s: l(1)=%.4f l(T)=%.4f", statistic, dataset.name, schedule.spec.label,
                 values[:, 0].mean(), values[:, -1].mean())
    return NonStationarityCurve(values.mean(axis=0), statistic, schedule.spec, draws)


def _curve_values(curve_or_values):
    return np.asarray(getattr(curve_or_values, 'values', curve_or_values), dtype=float)


def normalize(curve):
    """
    Min-max scale a curve to [0, 1].

    :return: The normalized values and a degeneracy flag; a constant curve normalizes to zeros.
    :rtype: tuple(numpy.ndarray, bool)
    """
    values = _curve_values(curve)
    span = np.max(values) - np.min(values)
    if span == 0:
        logger.warning("Constant non-stationarity curve normalized to zeros")
        return np.zeros_like(values), True
    return (values - np.min(values)) / span, False


def reference_line(T):
    """
    The linear target l* = linspace(1, 0, T).
    """
    return np.linspace(1.0, 0.0, T)


def discrepancy(normalized, metric=DEFAULT_METRIC, full_output=False):
    """
    Discrepancy between a normalized curve and the linear target l*.

    - auc: |area under the curve - 0.5| with the step axis rescaled to [0, 1] (trapezoidal rule)
    - mse, mae: mean squared / absolute error against l*
    - corr: 1 - Pearson correlation with l*
    - r2: 1 - R^2 of l* as a prediction of the curve

    :param bool full_output: Also return the degeneracy flag (constant curve for corr and r2).
    :raise DomainError: If the metric is unknown.
    """
    if metric not in METRICS:
        raise DomainError("Unknown metric {0!r}, use one of {1}".format(metric, METRICS))
    normalized = np.asarray(normalized, dtype=float)
    target = reference_line(normalized.size)
    degenerate = False
    if metric == 'auc':
        x = np.linspace(0.0, 1.0, normalized.size)
        value = abs(float(integrate.trapezoid(normalized, x)) - 0.5)
    elif metric == 'mse':
        value = float(mean_squared_error(target, normalized))
    elif metric == 'mae':
        value = float(mean_absolute_error(target, normalized))
    elif np.ptp(normalized) == 0 or normalized.size < 2:
        logger.warning("%s discrepancy undefined for a constant curve, using 1", metric)
        value, degenerate = 1.0, True
    elif metric == 'corr':
        value = max(0.0, 1.0 - float(stats.pearsonr(normalized, target)[0]))
    else:
        value = 1.0 - float(r2_score(normalized, target))
    if full_output:
        return value, degenerate
    return value


def ant_score(curve, metric=DEFAULT_METRIC):
    """
    ANT score of a non-stationarity curve.

    :param curve: :class:`NonStationarityCurve` (or raw curve values).
    :param str metric: Discrepancy metric.
    :rtype: AntScore
    :raise DomainError: If l^(1) = 0.
    """
    values = _curve_values(curve)
    if values[0] == 0:
        raise DomainError("lambda_noise undefined: first curve value is 0")
    normalized, flat = normalize(values)
    lambda_linear, undefined = discrepancy(normalized, metric, full_output=True)
    lambda_noise = 1.0 + values[-1] / values[0]
    lambda_step = 1.0 + 1.0 / values.size
    return AntScore(float(lambda_linear), float(lambda_noise), float(lambda_step),
                    float(lambda_linear * lambda_noise * lambda_step), metric, getattr(curve, 'spec', None),
                    bool(flat or undefined))


def _evaluate_candidate(dataset, spec, statistic, metric, draws, master_seed, max_lag, truncation):
    candidate_curve = curve(dataset, build_schedule(spec), statistic, draws, master_seed, n_jobs=1,
                            max_lag=max_lag, truncation=truncation)
    return candidate_curve, ant_score(candidate_curve, metric)


def evaluate_candidates(dataset, candidates, statistic=DEFAULT_STATISTIC, metric=DEFAULT_METRIC, max_steps=None,
                        master_seed=0, draws=1, n_jobs=1, max_lag=None, truncation='adaptive'):
    """
    Curves and scores of every candidate with T <= max_steps, in candidate order.

    :return: Triples (spec, curve, score).
    :rtype: list
    :raise DomainError: If no candidate is left.
    """
    candidates = list(candidates)
    if len(candidates) == 0:
        raise DomainError("No candidate schedules given")
    if max_steps is not None:
        candidates = [spec for spec in candidates if spec.T <= max_steps]
        if len(candidates) == 0:
            raise DomainError("Every candidate has T > max_steps={0}".format(max_steps))
    logger.info("Scoring %d candidates on %r (%s, %s)", len(candidates), dataset.name, statistic, metric)
    results = Parallel(n_jobs=n_jobs)(
        delayed(_evaluate_candidate)(dataset, spec, statistic, metric, draws, master_seed, max_lag, truncation)
        for spec in candidates)
    return [(spec, result[0], result[1]) for spec, result in zip(candidates, results)]


def order_results(results):
    """
    Sort (spec, ..., score) tuples by ascending score, ties broken by smaller T, then family order
    (linear, cosine, sigmoid, tabulated), then smaller tau.
    """
    return sorted(results, key=lambda item: (item[-1].score,) + item[0].sort_key())


def rank(dataset, candidates, statistic=DEFAULT_STATISTIC, metric=DEFAULT_METRIC, max_steps=None, master_seed=0,
         draws=1, n_jobs=1, max_lag=None, truncation='adaptive'):
    """
    Rank candidate schedules by ANT score.

    :return: Ordered (spec, AntScore) pairs, best first.
    :rtype: list
    :raise DomainError: If the candidate list is empty or every candidate exceeds ``max_steps``.
    """
    results = evaluate_candidates(dataset, candidates, statistic, metric, max_steps, master_seed, draws, n_jobs,
                                  max_lag, truncation)
    ranking = [(spec, score) for spec, _, score in order_results(results)]
    logger.info("Best schedule for %r: %s (score %.6f)", dataset.name, ranking[0][0].label, ranking[0][1].score)
    return ranking


def ranking_report(dataset_name, statistic, metric, ranking):
    """
    JSON-ready ranking {dataset, statistic, metric, results: [...]}.
    """
    return {'dataset': dataset_name, 'statistic': statistic, 'metric': metric,
            'results': [score.to_dict() for _, score in ranking]}


def save_ranking(report, json_path, csv_path=None):
    """
    Write a ranking report as JSON, and optionally its CSV twin.
    """
    with open(json_path, 'w', encoding='utf-8') as handle:
        json.dump(report, handle, indent=2)
    if csv_path is not None:
        frame = pds.DataFrame(report['results'],
                              columns=['spec', 'label', 'lambda_linear', 'lambda_noise', 'lambda_step', 'score'])
        frame.to_csv(csv_path, index=False, float_format='%.12g')


def curve_frame(curve):
    """
    Table (t, raw, normalized) with one row per step.
    """
    normalized, _ = normalize(curve)
    return pds.DataFrame({'t': np.arange(1, curve.T + 1), 'raw': curve.values, 'normalized': normalized})
