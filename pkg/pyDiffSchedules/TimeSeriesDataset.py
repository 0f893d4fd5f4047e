"""
Time series containers, CSV ingestion, synthetic generators and mean scaling.

Univariate series are stored as 1-d arrays of length L; multivariate series are stored channel-major
as arrays of shape (d, L).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pds
from scipy import signal

from .MeanAbsScaler import MeanAbsScaler
from .utils import DomainError, ParseError, ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    A single named series.

    :param str id: Series identifier.
    :param numpy.ndarray values: Observations, shape [L] or [d, L]. Stored read-only.
    """
    id: str
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim not in (1, 2):
            raise ShapeError("Series '{0}' must be 1-d or channel-major 2-d".format(self.id))
        if values.shape[-1] < 2:
            raise DomainError("Series '{0}' must have at least 2 observations".format(self.id))
        if not np.all(np.isfinite(values)):
            raise DomainError("Series '{0}' contains non-finite values".format(self.id))
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def length(self):
        return self.values.shape[-1]

    @property
    def d(self):
        return 1 if self.values.ndim == 1 else self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    A named, non-empty collection of series sharing the same dimensionality.

    :param str name: Dataset name (used in artifact file names).
    :param tuple series: The :class:`TimeSeries` records.
    :param int d: Number of aligned channels per record, 1 for univariate data.
    """
    name: str
    series: tuple
    d: int = 1

    def __post_init__(self):
        series = tuple(self.series)
        if len(series) == 0:
            raise DomainError("Dataset '{0}' has no series".format(self.name))
        for ts in series:
            if ts.d != self.d:
                raise ShapeError("Series '{0}' has {1} channels, dataset declares d={2}".format(ts.id, ts.d, self.d))
        object.__setattr__(self, 'series', series)

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    @property
    def ids(self):
        return [ts.id for ts in self.series]

    def as_matrix(self):
        """
        Stack equal-length univariate series into a matrix [n_series, L].

        :raise ShapeError: If the series have different lengths or the dataset is multivariate.
        """
        lengths = {ts.length for ts in self.series}
        if self.d != 1 or len(lengths) != 1:
            raise ShapeError("as_matrix needs equal-length univariate series")
        return np.vstack([ts.values for ts in self.series])

    def scaled(self):
        """
        Copy of the dataset with every series mean-scaled (see :func:`mean_scale`).
        """
        return Dataset(self.name, tuple(mean_scale(ts)[0] for ts in self.series), self.d)

    def __repr__(self):
        return "Dataset(name={0!r}, n={1}, d={2})".format(self.name, len(self.series), self.d)


def _parse_cell(cell, row, column):
    try:
        value = float(cell)
    except ValueError:
        raise ParseError("Non-numeric cell {0!r} at row {1}, column {2!r}".format(cell, row, column))
    if not math.isfinite(value):
        raise ParseError("Non-finite cell {0!r} at row {1}, column {2!r}".format(cell, row, column))
    return value


def _parse_index(cell, row):
    value = _parse_cell(cell, row, 'index')
    if not value.is_integer():
        raise ParseError("Non-integer index {0!r} at row {1}".format(cell, row))
    return int(value)


def _group_channels(records, name):
    """
    Assemble (id, channel, values) records into TimeSeries, checking channel alignment.
    """
    grouped = {}
    for series_id, channel, values in records:
        grouped.setdefault(series_id, []).append((channel, values))

    multivariate = any(channel is not None for _, channel, _ in records)
    series = []
    dims = set()
    for series_id, channels in grouped.items():
        if not multivariate:
            if len(channels) > 1:
                raise ParseError("Duplicated series id {0!r}".format(series_id))
            series.append(TimeSeries(series_id, channels[0][1]))
            dims.add(1)
            continue
        lengths = {len(values) for _, values in channels}
        if len(lengths) != 1:
            raise ShapeError("Ragged channels for series {0!r}: lengths {1}".format(series_id, sorted(lengths)))
        series.append(TimeSeries(series_id, np.vstack([values for _, values in channels])))
        dims.add(len(channels))

    if len(dims) != 1:
        raise ShapeError("Records of dataset {0!r} have different channel counts {1}".format(name, sorted(dims)))
    d = dims.pop()
    if multivariate and d == 1:
        series = [TimeSeries(ts.id, ts.values[0]) for ts in series]
    return Dataset(name, tuple(series), d)


def load_csv(path, layout='wide', name=None):
    """
    Load a dataset from a CSV file.

    Wide layout: header ``id,v1,v2,...`` and one series per row; trailing empty cells shorten a series.
    Long layout: header ``id,index,value`` sorted by (id, index).
    Either layout may carry a ``channel`` column for multivariate records.

    :param str path: CSV file path.
    :param str layout: 'wide' or 'long'.
    :param str name: Dataset name, defaults to the file stem.
    :return: The parsed dataset.
    :rtype: Dataset
    :raise ParseError: On non-numeric or non-finite cells, naming the row and column.
    :raise ShapeError: On ragged multivariate channels.
    """
    if name is None:
        name = str(path).replace('\\', '/').split('/')[-1].rsplit('.', 1)[0]
    frame = pds.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    if 'id' not in frame.columns:
        raise ParseError("CSV file {0} has no 'id' column".format(path))
    has_channel = 'channel' in frame.columns

    records = []
    if layout == 'wide':
        value_columns = [c for c in frame.columns if c not in ('id', 'channel')]
        for row_number, row in enumerate(frame.to_dict('records'), start=2):
            cells = [row[c] for c in value_columns]
            while cells and cells[-1].strip() == '':
                cells.pop()
            values = [_parse_cell(cell, row_number, column) for cell, column in zip(cells, value_columns)]
            channel = row['channel'] if has_channel else None
            records.append((row['id'], channel, np.array(values)))
    elif layout == 'long':
        for column in ('index', 'value'):
            if column not in frame.columns:
                raise ParseError("Long CSV file {0} has no {1!r} column".format(path, column))
        parsed = []
        for row_number, (series_id, index, value, channel) in enumerate(
                zip(frame['id'], frame['index'], frame['value'],
                    frame['channel'] if has_channel else [None] * len(frame)), start=2):
            parsed.append((series_id, channel, _parse_index(index, row_number),
                           _parse_cell(value, row_number, 'value')))
        keys = {}
        for series_id, channel, index, value in parsed:
            keys.setdefault((series_id, channel), []).append((index, value))
        for (series_id, channel), points in keys.items():
            indices = [p[0] for p in points]
            if any(later <= earlier for earlier, later in zip(indices, indices[1:])):
                raise ParseError("Long CSV rows for id {0!r} are not sorted by a unique index".format(series_id))
            records.append((series_id, channel, np.array([p[1] for p in points])))
    else:
        raise DomainError("Unknown CSV layout {0!r}, use 'wide' or 'long'".format(layout))

    dataset = _group_channels(records, name)
    logger.info("Loaded %s from %s", dataset, path)
    return dataset


def to_csv(dataset, path):
    """
    Write a dataset in wide layout. Values are written with ``repr`` so reloading is bit-exact.

    :param Dataset dataset: Dataset to write.
    :param str path: Destination file.
    """
    length = max(ts.length for ts in dataset.series)
    columns = ['id'] + (['channel'] if dataset.d > 1 else []) + ['v{0}'.format(i + 1) for i in range(length)]
    rows = []
    for ts in dataset.series:
        channels = ts.values if ts.values.ndim == 2 else ts.values[np.newaxis, :]
        for channel_index, values in enumerate(channels):
            cells = [repr(float(v)) for v in values] + [''] * (length - values.size)
            head = [ts.id] + ([str(channel_index)] if dataset.d > 1 else [])
            rows.append(head + cells)
    pds.DataFrame(rows, columns=columns).to_csv(path, index=False, encoding='utf-8')


def generate_ar1(phi, n, length, seed, name=None):
    """
    Generate AR(1) series x_t = phi * x_{t-1} + e_t with standard normal innovations and x_0 drawn
    from the stationary distribution N(0, 1 / (1 - phi^2)).

    :param float phi: Autoregressive coefficient, |phi| < 1.
    :param int n: Number of series.
    :param int length: Length of each series.
    :param int seed: Seed; the output is a pure function of the parameters and the seed.
    :raise DomainError: If |phi| >= 1.
    """
    if not abs(phi) < 1:
        raise DomainError("AR(1) coefficient must satisfy |phi| < 1, got {0}".format(phi))
    if n < 1 or length < 2:
        raise DomainError("Need n >= 1 series of length >= 2")
    rng = np.random.default_rng(seed)
    innovations = rng.standard_normal((n, length))
    innovations[:, 0] *= 1.0 / math.sqrt(1.0 - phi ** 2)
    paths = signal.lfilter([1.0], [1.0, -phi], innovations, axis=1)
    name = name if name is not None else 'ar1_phi{0}'.format(phi)
    return Dataset(name, tuple(TimeSeries('s{0}'.format(i), paths[i]) for i in range(n)))


def generate_sine_mix(n, length, periods, noise_std, seed, name=None):
    """
    Generate sums of sinusoids with random phases plus Gaussian noise.

    :param int n: Number of series.
    :param int length: Length of each series.
    :param list periods: Periods of the sinusoids, each > 1.
    :param float noise_std: Standard deviation of the additive noise, >= 0.
    :param int seed: Seed.
    :raise DomainError: If ``periods`` is empty or contains a period <= 1.
    """
    periods = list(periods)
    if len(periods) == 0:
        raise DomainError("At least one period is required")
    if any(p <= 1 for p in periods):
        raise DomainError("Periods must be > 1, got {0}".format(periods))
    if noise_std < 0:
        raise DomainError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    steps = np.arange(length)
    series = []
    for i in range(n):
        phases = rng.uniform(0.0, 2.0 * np.pi, size=len(periods))
        values = np.zeros(length)
        for period, phase in zip(periods, phases):
            values += np.sin(2.0 * np.pi * steps / period + phase)
        values += noise_std * rng.standard_normal(length)
        series.append(TimeSeries('s{0}'.format(i), values))
    name = name if name is not None else 'sine_mix'
    return Dataset(name, tuple(series))


def generate_from_spec(text, seed):
    """
    Build a synthetic dataset from a generator string:
    ``ar1:phi=0.95,n=64,length=512`` or ``sine:n=32,length=256,periods=24/168,noise=0.1``.

    :raise ParseError: On malformed strings.
    """
    head, _, body = text.strip().partition(':')
    options = {}
    for item in filter(None, (p.strip() for p in body.split(','))):
        key, sep, value = item.partition('=')
        if not sep:
            raise ParseError("Malformed generator option {0!r} in {1!r}".format(item, text))
        options[key.strip()] = value.strip()
    try:
        n = int(options.get('n', 64))
        length = int(options.get('length', 512))
        if head == 'ar1':
            phi = float(options.get('phi', 0.95))
            return generate_ar1(phi, n, length, seed, name='ar1_phi{0}'.format(phi))
        if head == 'sine':
            periods = [float(p) for p in options.get('periods', '24').split('/')]
            return generate_sine_mix(n, length, periods, float(options.get('noise', 0.1)), seed)
    except ValueError as verr:
        if isinstance(verr, DomainError):
            raise verr
        raise ParseError("Bad number in generator spec {0!r}: {1}".format(text, verr))
    raise ParseError("Unknown generator {0!r}, use 'ar1:...' or 'sine:...'".format(head))


def mean_scale(series):
    """
    Divide a series by the mean of the absolute values of its observations.

    :param TimeSeries series: Series to scale.
    :return: The scaled series and the scale (for inversion).
    :rtype: tuple(TimeSeries, float)
    :raise DegenerateScaleError: If the series is all zeros.
    """
    flat = series.values.reshape(1, -1)
    scaler = MeanAbsScaler(scale_power=1)
    scaled = scaler.fit_transform(flat).reshape(series.values.shape)
    return TimeSeries(series.id, scaled), float(scaler.scale_[0])


def windows(dataset, length, count, rng):
    """
    Draw ``count`` random windows of ``length`` observations from the dataset (uniform series,
    uniform start).

    :return: Array of windows, shape [count, length] (or [count, d, length] for multivariate data).
    :raise DomainError: If no series is long enough.
    """
    eligible = [ts for ts in dataset.series if ts.length >= length]
    if len(eligible) == 0:
        raise DomainError("No series of length >= {0} in dataset {1!r}".format(length, dataset.name))
    picks = rng.integers(0, len(eligible), size=count)
    out = []
    for pick in picks:
        values = eligible[pick].values
        start = rng.integers(0, values.shape[-1] - length + 1)
        out.append(values[..., start:start + length])
    return np.stack(out)
