"""
Command line interface: ``ant-schedule <command> [options]``.

Every command reads a dataset (``--data`` CSV file or ``--gen`` synthetic generator), writes its
artifacts into ``--out`` (environment variable ANT_OUT_DIR, default ./ant_output) and is a pure
function of ``--seed``.
"""

import functools
import logging
import os
from dataclasses import dataclass

import click
import numpy as np
import pandas as pds

from .AntPlotMixin import AntPlotMixin
from .AntScore import METRICS, ant_score, curve, curve_frame, rank, ranking_report, save_ranking
from .DiffusionProcess import GuidanceTarget, corrupt_trajectory, sample, trajectory_frame
from .Experiments import (ProxyConfig, artifact_name, generation_trace, plot_generation_trace, plot_scan,
                          proxy_step_classification, robustness_scan, selection_agreement, write_report,
                          zero_snr_comparison)
from .NoiseSchedule import build_schedule, candidate_grid, parse_schedule_spec, save_schedule
from .NonStationarity import STATISTICS, evaluate_statistic
from .PlotMixin import save_svg
from .TimeSeriesDataset import generate_from_spec, load_csv
from .ToyDenoiser import ToyDenoiser
from .utils import NumericError, derive_rng

logger = logging.getLogger(__name__)

DEFAULT_OUT = 'ant_output'
DEFAULT_GEN = 'ar1:phi=0.95,n=64,length=512'


@dataclass(frozen=True)
class RunConfig:
    """
    Resolved command line options shared by the commands.
    """
    data: str = None
    layout: str = 'wide'
    gen: str = None
    schedules: tuple = ()
    grid: str = 'default'
    statistic: str = 'iaat'
    metric: str = 'auc'
    draws: int = 1
    max_steps: int = None
    seed: int = 0
    jobs: int = -1
    out: str = DEFAULT_OUT

    def load_dataset(self):
        if self.data is not None:
            return load_csv(self.data, layout=self.layout)
        return generate_from_spec(self.gen or DEFAULT_GEN, self.seed)

    def candidates(self):
        if self.schedules:
            return [parse_schedule_spec(text) for text in self.schedules]
        if self.grid == 'default':
            return candidate_grid()
        with open(self.grid, 'r', encoding='utf-8') as handle:
            return [parse_schedule_spec(line) for line in handle if line.strip() and not line.startswith('#')]

    def schedule(self):
        if len(self.schedules) != 1:
            raise click.UsageError("Exactly one --schedule is required")
        return build_schedule(parse_schedule_spec(self.schedules[0]))

    def out_path(self, name):
        os.makedirs(self.out, exist_ok=True)
        return os.path.join(self.out, name)


def _data_options(command):
    options = [
        click.option('--data', type=click.Path(exists=True, dir_okay=False), default=None, help="CSV dataset."),
        click.option('--layout', type=click.Choice(['wide', 'long']), default='wide', help="CSV layout."),
        click.option('--gen', default=None,
                     help="Synthetic dataset, e.g. 'ar1:phi=0.95,n=64,length=512' (default when --data is absent)."),
        click.option('--seed', type=int, default=0, show_default=True, help="Master seed."),
        click.option('--out', envvar='ANT_OUT_DIR', default=DEFAULT_OUT, show_default=True,
                     help="Output directory (env ANT_OUT_DIR)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _scoring_options(command):
    options = [
        click.option('--schedule', 'schedules', multiple=True,
                     help="Schedule spec, e.g. 'cos:T=75,tau=2.0'; repeat for several."),
        click.option('--grid', default='default', show_default=True,
                     help="'default' for the 35-schedule grid or a file with one spec per line."),
        click.option('--stat', 'statistic', type=click.Choice(sorted(STATISTICS)), default='iaat', show_default=True),
        click.option('--metric', type=click.Choice(METRICS), default='auc', show_default=True),
        click.option('--draws', type=int, default=1, show_default=True, help="Trajectories per series."),
        click.option('--max-steps', type=int, default=None, help="Only consider schedules with T <= max-steps."),
        click.option('--jobs', type=int, default=-1, show_default=True, help="Parallel workers (-1: all cores)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ValueError, NumericError, OSError) as err:
            logger.debug("Command failed", exc_info=True)
            raise click.ClickException(str(err))
    return wrapper


@click.group()
@click.option('-v', '--verbose', count=True, help="-v for info, -vv for debug messages.")
def main(verbose):
    """Select diffusion noise schedules for time series with the ANT score."""
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')


@main.command('rank')
@_data_options
@_scoring_options
@_handle_errors
def cmd_rank(**options):
    """Rank candidate schedules and write the ranking and the winner."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    ranking = rank(dataset, config.candidates(), config.statistic, config.metric, config.max_steps, config.seed,
                   config.draws, config.jobs)
    report = ranking_report(dataset.name, config.statistic, config.metric, ranking)
    stem = artifact_name('rank', dataset.name, seed=config.seed, suffix=None)
    save_ranking(report, config.out_path(stem + '.json'), config.out_path(stem + '.csv'))
    best_spec = ranking[0][0]
    save_schedule(build_schedule(best_spec), config.out_path(
        artifact_name('schedule', dataset.name, best_spec, config.seed)))
    table = pds.DataFrame(report['results'][:5])[['label', 'lambda_linear', 'lambda_noise', 'lambda_step', 'score']]
    click.echo(table.to_string(index=False, float_format=lambda v: '{0:.6f}'.format(v)))


@main.command('score')
@_data_options
@_scoring_options
@_handle_errors
def cmd_score(**options):
    """ANT score of a single schedule."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    schedule = config.schedule()
    score = ant_score(curve(dataset, schedule, config.statistic, config.draws, config.seed, config.jobs),
                      config.metric)
    report = dict(score.to_dict(), dataset=dataset.name, statistic=config.statistic, metric=config.metric)
    write_report(report, config.out_path(artifact_name('score', dataset.name, schedule.spec, config.seed)))
    click.echo("{0}: score={1:.6f} (linear {2:.6f}, noise {3:.6f}, step {4:.6f})".format(
        schedule.spec.label, score.score, score.lambda_linear, score.lambda_noise, score.lambda_step))


@main.command('curve')
@_data_options
@_scoring_options
@click.option('--plot/--no-plot', default=False, help="Also write an SVG line plot.")
@_handle_errors
def cmd_curve(plot, **options):
    """Non-stationarity curve of one schedule as CSV (t, raw, normalized)."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    schedule = config.schedule()
    result = curve(dataset, schedule, config.statistic, config.draws, config.seed, config.jobs)
    curve_frame(result).to_csv(config.out_path(artifact_name('curve', dataset.name, schedule.spec, config.seed,
                                                             'csv')), index=False, float_format='%.12g')
    if plot:
        fig, _ = AntPlotMixin.curve_figure([result])
        save_svg(fig, config.out_path(artifact_name('curve', dataset.name, schedule.spec, config.seed, 'svg')))


@main.command('stats')
@_data_options
@_handle_errors
def cmd_stats(**options):
    """Per-series non-stationarity statistics as CSV (id, stat, value)."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    names = ['iaat', 'iat', 'lag1ac', 'varac'] + (['miaat'] if dataset.d > 1 else [])
    rows = []
    for ts in dataset:
        for name in names:
            values, _ = evaluate_statistic(name, ts.values[np.newaxis, ...])
            rows.append({'id': ts.id, 'stat': name, 'value': float(values[0])})
    pds.DataFrame(rows).to_csv(config.out_path(artifact_name('stats', dataset.name, seed=config.seed, suffix='csv')),
                               index=False, float_format='%.12g')


@main.command('corrupt')
@_data_options
@_scoring_options
@_handle_errors
def cmd_corrupt(**options):
    """Dump corrupted trajectories as CSV (series_id, t, coord_index, value)."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    schedule = config.schedule()
    frames = [trajectory_frame(ts.id, corrupt_trajectory(ts.values, schedule, derive_rng(config.seed, i, 0)))
              for i, ts in enumerate(dataset.scaled())]
    pds.concat(frames, ignore_index=True).to_csv(
        config.out_path(artifact_name('corrupt', dataset.name, schedule.spec, config.seed, 'csv')), index=False,
        float_format='%.12g')


@main.command('proxy')
@_data_options
@_scoring_options
@click.option('--window', type=int, default=128, show_default=True)
@click.option('--windows', 'n_windows', type=int, default=3000, show_default=True)
@click.option('--epochs', type=int, default=30, show_default=True)
@click.option('--lr', type=float, default=1e-2, show_default=True)
@_handle_errors
def cmd_proxy(window, n_windows, epochs, lr, **options):
    """Proxy step classification: confusion matrix, accuracy and convolution features."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    if not config.schedules:
        raise click.UsageError("At least one --schedule is required")
    for spec in config.candidates():
        proxy = ProxyConfig(window, n_windows, epochs, lr, seed=config.seed)
        result = proxy_step_classification(dataset, spec, proxy)
        write_report({'experiment': 'proxy', 'dataset': dataset.name, 'schedule': spec.to_string(),
                      'label': spec.label, 'seed': config.seed, 'accuracy': result.accuracy,
                      'confusion': result.confusion.counts.tolist()},
                     config.out_path(artifact_name('proxy', dataset.name, spec, config.seed)))
        np.savez(config.out_path(artifact_name('proxy_features', dataset.name, spec, config.seed, 'npz')),
                 features=result.features, steps=result.steps)
        fig, ax = AntPlotMixin._heatmap(result.confusion.counts, "Predicted step index", "True step index")
        save_svg(fig, config.out_path(artifact_name('proxy', dataset.name, spec, config.seed, 'svg')))
        click.echo("{0}: accuracy {1:.4f}".format(spec.label, result.accuracy))


@main.group('toy')
def cmd_toy():
    """Toy diffusion model: train, sample and trace."""


@cmd_toy.command('train')
@_data_options
@_scoring_options
@click.option('--window', type=int, default=32, show_default=True)
@click.option('--hidden', type=int, default=64, show_default=True)
@click.option('--embedding/--no-embedding', default=True, show_default=True)
@click.option('--steps', 'train_steps', type=int, default=1000, show_default=True)
@click.option('--batch', type=int, default=64, show_default=True)
@click.option('--lr', type=float, default=1e-3, show_default=True)
@_handle_errors
def cmd_toy_train(window, hidden, embedding, train_steps, batch, lr, **options):
    """Train a toy denoiser; writes the parameters (JSON) and the loss trace (CSV)."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    schedule = config.schedule()
    model = ToyDenoiser(window, hidden, embedding, lr=lr, steps=train_steps, batch=batch,
                        random_state=config.seed).fit(dataset, schedule)
    model.save(config.out_path(artifact_name('toy_params', dataset.name, schedule.spec, config.seed)))
    model.save_trace(config.out_path(artifact_name('toy_loss', dataset.name, schedule.spec, config.seed, 'csv')))


def _guidance_target(dataset, window, observed, scale):
    if observed <= 0:
        return None
    values = dataset.series[0].values[:window]
    mask = np.arange(window) < int(round(observed * window))
    return GuidanceTarget(values, mask, scale)


@cmd_toy.command('sample')
@_data_options
@_scoring_options
@click.option('--params', 'params_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--n-samples', type=int, default=16, show_default=True)
@click.option('--observed', type=float, default=0.0, show_default=True,
              help="Fraction of the first (mean-scaled) window of the dataset used as guidance observations.")
@click.option('--guidance-scale', type=float, default=1.0, show_default=True)
@_handle_errors
def cmd_toy_sample(params_path, n_samples, observed, guidance_scale, **options):
    """Sample windows from a trained toy denoiser, optionally self-guided."""
    config = RunConfig(**options)
    schedule = config.schedule()
    model = ToyDenoiser.load(params_path, schedule)
    target = None
    if observed > 0:
        target = _guidance_target(config.load_dataset().scaled(), model.window, observed, guidance_scale)
    samples = sample(model, schedule, model.window, derive_rng(config.seed, 0), target=target, n_samples=n_samples)
    frame = pds.DataFrame(samples, columns=['v{0}'.format(i + 1) for i in range(model.window)])
    frame.insert(0, 'id', ['sample{0}'.format(i) for i in range(n_samples)])
    frame.to_csv(config.out_path(artifact_name('toy_samples', 'toy', schedule.spec, config.seed, 'csv')),
                 index=False, float_format='%.12g')


@cmd_toy.command('trace')
@_data_options
@_scoring_options
@click.option('--params', 'params_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--n-samples', type=int, default=64, show_default=True)
@_handle_errors
def cmd_toy_trace(params_path, n_samples, **options):
    """Statistic of the sample population at every backward step (T + 1 rows)."""
    config = RunConfig(**options)
    schedule = config.schedule()
    model = ToyDenoiser.load(params_path, schedule)
    trace = generation_trace(model, schedule, config.statistic, n_samples, config.seed)
    trace.to_csv(config.out_path(artifact_name('toy_trace', 'toy', schedule.spec, config.seed, 'csv')),
                 index=False, float_format='%.12g')
    plot_generation_trace(trace, config.out_path(artifact_name('toy_trace', 'toy', schedule.spec, config.seed,
                                                               'svg')), config.statistic)


@main.command('scan')
@_data_options
@_scoring_options
@click.option('--families', default='linear,cosine', show_default=True)
@click.option('--steps-list', default='10,20,50,75,100', show_default=True)
@click.option('--tau', type=float, default=1.0, show_default=True)
@_handle_errors
def cmd_scan(families, steps_list, tau, **options):
    """Robustness of the curves to T: curves, dispersion and posterior variance sums."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    try:
        T_list = [int(v) for v in steps_list.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter("--steps-list must be comma-separated integers")
    scan = robustness_scan(dataset, tuple(f.strip() for f in families.split(',')), T_list, config.statistic,
                           config.metric, tau, config.seed, config.draws, config.jobs)
    stem = artifact_name('scan', dataset.name, seed=config.seed, suffix=None)
    scan.curves.to_csv(config.out_path(stem + '_curves.csv'), index=False, float_format='%.12g')
    scan.summary.to_csv(config.out_path(stem + '_summary.csv'), index=False, float_format='%.12g')
    write_report({'experiment': 'scan', 'dataset': dataset.name, 'dispersion': scan.dispersion,
                  'posterior_spread': scan.posterior_spread}, config.out_path(stem + '.json'))
    plot_scan(scan, config.out_path(stem))
    for family in scan.dispersion:
        click.echo("{0}: dispersion {1:.4f}, posterior variance spread {2:.4f}".format(
            family, scan.dispersion[family], scan.posterior_spread[family]))


@main.command('agreement')
@_data_options
@_scoring_options
@_handle_errors
def cmd_agreement(**options):
    """Winner of the ranking for every (statistic, metric) pair."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    table, agreement = selection_agreement(dataset, config.candidates(), master_seed=config.seed,
                                           draws=config.draws, n_jobs=config.jobs, max_steps=config.max_steps)
    table.to_csv(config.out_path(artifact_name('agreement', dataset.name, seed=config.seed, suffix='csv')),
                 index=False, float_format='%.12g')
    click.echo("Agreement with the default selection: {0:.2f}".format(agreement))


@main.command('zero-snr')
@_data_options
@_scoring_options
@_handle_errors
def cmd_zero_snr(**options):
    """Score a schedule and its zero-terminal-SNR rescale."""
    config = RunConfig(**options)
    dataset = config.load_dataset()
    spec = config.schedule().spec
    report = zero_snr_comparison(dataset, spec, config.statistic, config.metric, config.seed, config.draws)
    write_report(report, config.out_path(artifact_name('zero_snr', dataset.name, spec, config.seed)))


if __name__ == '__main__':
    main()
