from pyDiffSchedules.MeanAbsScaler import MeanAbsScaler
from pyDiffSchedules.TimeSeriesDataset import Dataset, TimeSeries, load_csv, to_csv, generate_ar1, generate_sine_mix
from pyDiffSchedules.NoiseSchedule import (Schedule, ScheduleSpec, make_linear, make_cosine, make_sigmoid, from_table,
                                           rescale_zero_terminal_snr, candidate_grid, parse_schedule_spec,
                                           build_schedule)
from pyDiffSchedules.AntScore import NonStationarityCurve, AntScore, curve, ant_score, rank
from pyDiffSchedules.AntScheduleSelector import AntScheduleSelector
from pyDiffSchedules.ToyDenoiser import ToyDenoiser
from pyDiffSchedules.ProxyStepClassifier import ProxyStepClassifier

__version__ = '0.1.0'

__all__ = ['MeanAbsScaler', 'Dataset', 'TimeSeries', 'load_csv', 'to_csv', 'generate_ar1', 'generate_sine_mix',
           'Schedule', 'ScheduleSpec', 'make_linear', 'make_cosine', 'make_sigmoid', 'from_table',
           'rescale_zero_terminal_snr', 'candidate_grid', 'parse_schedule_spec', 'build_schedule',
           'NonStationarityCurve', 'AntScore', 'curve', 'ant_score', 'rank',
           'AntScheduleSelector', 'ToyDenoiser', 'ProxyStepClassifier']

"""
The pyDiffSchedules package selects the noise schedule of a diffusion model for a time series dataset, by corrupting
the data under candidate schedules and measuring how linearly their non-stationarity decays (the ANT score).

MeanAbsScaler - Scaler dividing each series by the mean of its absolute values, applied before corruption.

AntScheduleSelector - Ranks candidate schedules (by default 35 linear, cosine and sigmoid schedules) and keeps the
non-stationarity curves and ANT scores of every candidate.

ToyDenoiser - Small noise-prediction network with an optional diffusion-step embedding, used for sampling,
self-guidance and the step-embedding ablation.

ProxyStepClassifier - Convolutional classifier of the diffusion step of corrupted windows.

The functional building blocks live in NoiseSchedule, DiffusionProcess, NonStationarity, AntScore and Experiments;
the ant-schedule command line tool is in cli.
"""
