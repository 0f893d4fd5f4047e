"""
Desk-scale studies of the mechanisms behind schedule selection: proxy step classification, the
step-embedding ablation, robustness of curves to the number of steps, generation traces, CRPS,
agreement of the selection across statistics and metrics, and the zero-terminal-SNR comparison.
"""

import json
import logging
import re
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
import pandas as pds
from sklearn.model_selection import train_test_split

from .AntPlotMixin import AntPlotMixin
from .AntScore import (DEFAULT_METRIC, DEFAULT_STATISTIC, METRICS, ant_score, curve, evaluate_candidates, normalize,
                       order_results)
from .DiffusionProcess import forward_closed, sample
from .NoiseSchedule import GRID_STEPS, ScheduleSpec, build_schedule, posterior_variance_sum
from .NonStationarity import evaluate_statistic
from .PlotMixin import PlotMixin, save_svg
from .ProxyStepClassifier import ProxyStepClassifier
from .TimeSeriesDataset import windows
from .ToyDenoiser import DenoiserConfig, ToyDenoiser, smoothed_loss
from .utils import DomainError, ShapeError, derive_rng

logger = logging.getLogger(__name__)

QUANTILE_LEVELS = np.linspace(0.1, 0.9, 9)
DISPERSION_GRID = 101
AGREEMENT_STATISTICS = ('iaat', 'iat', 'lag1ac', 'varac')


@dataclass(frozen=True)
class ProxyConfig:
    """
    Budget of the proxy step-classification task.
    """
    window: int = 128
    n_windows: int = 3000
    epochs: int = 30
    lr: float = 1e-2
    batch: int = 64
    test_size: float = 0.25
    seed: int = 0


@dataclass(frozen=True, eq=False)
class ProxyResult:
    """
    Held-out confusion matrix, rectified convolution features [n_test, 4, window - 2] and the
    true steps of the held-out windows.
    """
    spec: ScheduleSpec
    confusion: object
    features: np.ndarray
    steps: np.ndarray

    @property
    def accuracy(self):
        return self.confusion.accuracy


@dataclass(frozen=True, eq=False)
class ScanResult:
    """
    Output of :func:`robustness_scan`.

    :param pandas.DataFrame curves: Long table (family, T, t, progress, normalized).
    :param pandas.DataFrame summary: One row per (family, T): score and posterior variance sum.
    :param dict dispersion: Max pairwise distance between the normalized curves of each family.
    :param dict posterior_spread: Coefficient of variation of the posterior variance sums per family.
    """
    curves: pds.DataFrame
    summary: pds.DataFrame
    dispersion: dict
    posterior_spread: dict
    curve_objects: dict


def artifact_name(experiment, dataset_name, spec=None, seed=None, suffix='json'):
    """
    File name encoding (experiment, dataset, schedule, seed), e.g. ``proxy_ar1_Lin-20_seed0.json``.
    """
    parts = [experiment, dataset_name]
    if spec is not None:
        parts.append(re.sub(r'[^A-Za-z0-9.+]+', '-', spec.label).strip('-'))
    if seed is not None:
        parts.append('seed{0}'.format(seed))
    return '_'.join(parts) + ('.' + suffix if suffix else '')


def write_report(report, path):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(report, handle, indent=2)


def _corrupted_windows(dataset, schedule, n_windows, window, rng):
    if dataset.d != 1:
        raise ShapeError("Experiments on windows need a univariate dataset")
    x0 = windows(dataset.scaled(), window, n_windows, rng)
    steps = rng.integers(1, schedule.T + 1, size=n_windows)
    x_t = np.empty_like(x0)
    for i, t in enumerate(steps):
        x_t[i] = forward_closed(x0[i], int(t), schedule, rng)
    return x_t, steps


def proxy_step_classification(dataset, schedule, config=ProxyConfig()):
    """
    Corrupt random windows to uniformly drawn steps, train the step classifier on a training split
    and evaluate it on the held-out split.

    :param Dataset dataset: Univariate dataset, series at least ``config.window`` long.
    :param schedule: :class:`Schedule` (or spec); the classes are its T steps.
    :param ProxyConfig config: Task budget.
    :rtype: ProxyResult
    :raise DomainError: If the windows are too short.
    """
    if not hasattr(schedule, 'beta'):
        schedule = build_schedule(schedule)
    if config.window < 3:
        raise DomainError("Proxy windows must hold at least 3 observations")
    rng = derive_rng(config.seed, 0)
    x_t, steps = _corrupted_windows(dataset, schedule, config.n_windows, config.window, rng)
    x_train, x_test, y_train, y_test = train_test_split(x_t, steps - 1, test_size=config.test_size,
                                                        random_state=config.seed)
    classifier = ProxyStepClassifier(lr=config.lr, epochs=config.epochs, batch=config.batch,
                                     random_state=config.seed)
    classifier.fit(x_train, y_train, n_classes=schedule.T)
    confusion = classifier.confusion(x_test, y_test)
    logger.info("Proxy task %s on %r (seed %d): accuracy %.4f", schedule.spec.label, dataset.name, config.seed,
                confusion.accuracy)
    return ProxyResult(schedule.spec, confusion, classifier.transform(x_test), y_test + 1)


def proxy_accuracy_scan(dataset, specs, config=ProxyConfig(), seeds=range(5)):
    """
    Held-out proxy accuracy of every spec under each seed (paired: a seed draws the same windows).

    :return: Table (label, seed, accuracy).
    :rtype: pandas.DataFrame
    """
    rows = []
    for spec in specs:
        for seed in seeds:
            result = proxy_step_classification(dataset, spec, replace(config, seed=seed))
            rows.append({'label': spec.label, 'seed': seed, 'accuracy': result.accuracy})
    return pds.DataFrame(rows)


def _window_iaat(x):
    values, _ = evaluate_statistic('iaat', x)
    return float(values.mean())


def de_ablation(dataset, schedule, config=DenoiserConfig(), n_eval=256, n_samples=64):
    """
    Train two denoisers that only differ in the step embedding and compare them.

    Both runs share the initialization of the common weights and the training batches. The report
    holds, for each run, the smoothed final training loss, the loss on fixed held-out draws and
    the distance between the mean IAAT of generated and of real windows.

    :rtype: dict
    """
    if not hasattr(schedule, 'beta'):
        schedule = build_schedule(schedule)
    eval_windows = windows(dataset.scaled(), config.window, n_eval, derive_rng(config.seed, 1))
    real_iaat = _window_iaat(eval_windows)
    report = {'experiment': 'de_ablation', 'dataset': dataset.name, 'schedule': schedule.spec.to_string(),
              'label': schedule.spec.label, 'seed': config.seed}
    for key, enabled in (('with_de', True), ('without_de', False)):
        model = ToyDenoiser(config.window, config.h, enabled, config.embedding_dim, config.lr, config.steps,
                            config.batch, config.seed).fit(dataset, schedule)
        generated = sample(model, schedule, config.window, derive_rng(config.seed, 2), n_samples=n_samples)
        report[key] = {'final_loss': smoothed_loss(model.loss_trace_),
                       'eval_loss': model.eval_loss(eval_windows, schedule, seed=config.seed),
                       'iaat_distance': abs(_window_iaat(generated) - real_iaat)}
    report['gap'] = report['without_de']['eval_loss'] - report['with_de']['eval_loss']
    logger.info("DE ablation %s: eval loss %.5f with, %.5f without", schedule.spec.label,
                report['with_de']['eval_loss'], report['without_de']['eval_loss'])
    return report


def curve_dispersion(curves, grid_points=DISPERSION_GRID):
    """
    Largest sup-norm distance between two normalized curves, each interpolated on a common grid of
    diffusion progress in [0, 1]. A single curve has dispersion 0.
    """
    grid = np.linspace(0.0, 1.0, grid_points)
    profiles = [np.interp(grid, c.progress, normalize(c)[0]) for c in curves]
    distances = [np.max(np.abs(a - b)) for a, b in combinations(profiles, 2)]
    return float(max(distances)) if distances else 0.0


def relative_spread(values):
    """
    Coefficient of variation std / mean.
    """
    values = np.asarray(values, dtype=float)
    return float(np.std(values) / np.mean(values))


def _family_spec(family, T, tau):
    if family == 'linear':
        return ScheduleSpec('linear', T)
    return ScheduleSpec(family, T, tau=tau)


def robustness_scan(dataset, families=('linear', 'cosine'), T_list=GRID_STEPS, statistic=DEFAULT_STATISTIC,
                    metric=DEFAULT_METRIC, tau=1.0, master_seed=0, draws=1, n_jobs=1):
    """
    Curves of each family for every T in ``T_list``, their dispersion across T and the spread of
    the posterior variance sums.

    :rtype: ScanResult
    :raise DomainError: If ``T_list`` is empty.
    """
    T_list = list(T_list)
    if len(T_list) == 0:
        raise DomainError("T_list must not be empty")
    specs = [_family_spec(family, T, tau) for family in families for T in T_list]
    results = evaluate_candidates(dataset, specs, statistic, metric, master_seed=master_seed, draws=draws,
                                  n_jobs=n_jobs)
    curve_rows, summary_rows = [], []
    by_family = {family: [] for family in families}
    for spec, spec_curve, score in results:
        by_family[spec.family].append(spec_curve)
        normalized, _ = normalize(spec_curve)
        for t, (progress, value) in enumerate(zip(spec_curve.progress, normalized), start=1):
            curve_rows.append({'family': spec.family, 'T': spec.T, 't': t, 'progress': progress,
                               'normalized': value})
        summary_rows.append({'family': spec.family, 'T': spec.T, 'label': spec.label, 'score': score.score,
                             'posterior_variance_sum': posterior_variance_sum(build_schedule(spec))})
    summary = pds.DataFrame(summary_rows)
    dispersion = {family: curve_dispersion(family_curves) for family, family_curves in by_family.items()}
    spread = {family: relative_spread(summary.loc[summary['family'] == family, 'posterior_variance_sum'])
              for family in families}
    logger.info("Robustness scan on %r: dispersion %s", dataset.name, dispersion)
    return ScanResult(pds.DataFrame(curve_rows), summary, dispersion, spread, by_family)


def plot_scan(scan, path_prefix):
    """
    One SVG of normalized curves per family, written to ``<path_prefix>_<family>.svg``.
    """
    paths = []
    for family, family_curves in scan.curve_objects.items():
        fig, ax = AntPlotMixin.curve_figure(family_curves)
        ax.set_title("{0} (dispersion {1:.3f})".format(family, scan.dispersion[family]))
        path = '{0}_{1}.svg'.format(path_prefix, family)
        save_svg(fig, path)
        paths.append(path)
    return paths


def generation_trace(denoiser, schedule, statistic=DEFAULT_STATISTIC, n_samples=64, seed=0, window=None):
    """
    Mean statistic of a population of samples at every state of the backward process, from x^T
    (pure noise) down to x^0.

    :param denoiser: Object with ``predict(x, t)``; its ``window`` attribute is used when present.
    :return: Table (t, value) with T + 1 rows, t decreasing from T to 0.
    :rtype: pandas.DataFrame
    """
    window = getattr(denoiser, 'window', None) if window is None else window
    if window is None:
        raise DomainError("Window length required for this denoiser")
    trajectory = sample(denoiser, schedule, window, derive_rng(seed, 0), n_samples=n_samples,
                        return_trajectory=True)
    values = []
    for state in trajectory:
        statistic_values, _ = evaluate_statistic(statistic, state.x)
        values.append(float(statistic_values.mean()))
    return pds.DataFrame({'t': [state.t for state in trajectory], 'value': values})


def plot_generation_trace(trace, path=None, statistic=DEFAULT_STATISTIC):
    fig, ax = PlotMixin._lineplots(trace['value'].to_numpy(), xaxis=trace['t'].to_numpy())
    ax.invert_xaxis()
    ax.set_xlabel("Step t")
    ax.set_ylabel("Mean {0} of samples".format(statistic))
    if path is None:
        return fig
    save_svg(fig, path)
    return None


def quantile_loss(q, y, level):
    """
    Pinball loss (level - 1[y < q]) (y - q), elementwise.
    """
    q = np.asarray(q, dtype=float)
    y = np.asarray(y, dtype=float)
    return (level - (y < q)) * (y - q)


def crps(sample_forecasts, y, levels=QUANTILE_LEVELS):
    """
    Quantile-based CRPS: the mean over coordinates and quantile levels of twice the pinball loss of
    the empirical quantiles (linear interpolation between order statistics).

    :param sample_forecasts: Samples [n_samples, L] (or [n_samples] for a scalar target).
    :param y: Target [L] or scalar.
    :raise DomainError: If there are no samples.
    """
    samples = np.asarray(sample_forecasts, dtype=float)
    if samples.shape[0] == 0:
        raise DomainError("CRPS needs at least one sample forecast")
    quantiles = np.quantile(samples, levels, axis=0)
    losses = [quantile_loss(q, y, level) for q, level in zip(quantiles, levels)]
    return float(np.mean(2.0 * np.array(losses)))


def selection_agreement(dataset, candidates, statistics=AGREEMENT_STATISTICS, metrics=METRICS, master_seed=0,
                        draws=1, n_jobs=1, max_steps=None):
    """
    Winner of the ranking for every (statistic, metric) pair.

    :return: Table (statistic, metric, winner, score) and the fraction of pairs selecting the same
        schedule as the default (iaat, auc) pair.
    :rtype: tuple(pandas.DataFrame, float)
    """
    rows = []
    for statistic in statistics:
        results = evaluate_candidates(dataset, candidates, statistic, DEFAULT_METRIC, max_steps, master_seed, draws,
                                      n_jobs)
        for metric in metrics:
            scored = [(spec, ant_score(spec_curve, metric)) for spec, spec_curve, _ in results]
            best_spec, best_score = order_results(scored)[0]
            rows.append({'statistic': statistic, 'metric': metric, 'winner': best_spec.label,
                         'score': best_score.score})
    table = pds.DataFrame(rows)
    default = table.loc[(table['statistic'] == DEFAULT_STATISTIC) & (table['metric'] == DEFAULT_METRIC), 'winner']
    reference = default.iloc[0] if len(default) else table['winner'].iloc[0]
    return table, float(np.mean(table['winner'] == reference))


def zero_snr_comparison(dataset, spec, statistic=DEFAULT_STATISTIC, metric=DEFAULT_METRIC, master_seed=0, draws=1):
    """
    Score a schedule and its zero-terminal-SNR rescale side by side.

    :return: Report with the final alpha_bar and the ANT score factors of both schedules.
    :rtype: dict
    """
    report = {'experiment': 'zero_snr', 'dataset': dataset.name, 'statistic': statistic, 'metric': metric,
              'results': []}
    for candidate in (replace(spec, zero_terminal_snr=False), replace(spec, zero_terminal_snr=True)):
        schedule = build_schedule(candidate)
        score = ant_score(curve(dataset, schedule, statistic, draws, master_seed), metric)
        entry = score.to_dict()
        entry['alpha_bar_T'] = float(schedule.alpha_bar[-1])
        report['results'].append(entry)
    return report
