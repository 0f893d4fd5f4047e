"""
Candidate noise schedules (linear, cosine, sigmoid and tabulated) and their derived quantities.

A :class:`Schedule` holds beta_1..beta_T, alpha_t = 1 - beta_t, the cumulative products alpha_bar_t and
the posterior variances sigma_t^2 = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t, with alpha_bar_0 = 1.
"""

import json
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .utils import DomainError, ParseError

logger = logging.getLogger(__name__)

DEFAULT_BETA_1 = 1e-4
DEFAULT_BETA_T = 0.1
COSINE_OFFSET = 0.008
SIGMOID_START = -3.0
SIGMOID_END = 3.0
BETA_CLAMP = 0.999
ZERO_SNR_FLOOR = 1e-6

GRID_STEPS = (10, 20, 50, 75, 100)
COSINE_TAUS = (0.5, 1.0, 2.0)
SIGMOID_TAUS = (0.3, 0.5, 1.0)

FAMILIES = ('linear', 'cosine', 'sigmoid', 'tabulated')
FAMILY_ORDER = {family: rank for rank, family in enumerate(FAMILIES)}
_FAMILY_ALIASES = {'lin': 'linear', 'linear': 'linear', 'cos': 'cosine', 'cosine': 'cosine',
                   'sig': 'sigmoid', 'sigmoid': 'sigmoid', 'table': 'tabulated', 'tabulated': 'tabulated'}
_SHORT = {'linear': 'lin', 'cosine': 'cos', 'sigmoid': 'sig', 'tabulated': 'table'}


@dataclass(frozen=True)
class ScheduleSpec:
    """
    A candidate schedule: family, temperature tau and number of steps T.

    :param str family: 'linear', 'cosine', 'sigmoid' or 'tabulated'.
    :param int T: Number of diffusion steps.
    :param float tau: Temperature (cosine and sigmoid only).
    :param float beta_1: First beta of a linear schedule.
    :param float beta_T: Last beta of a linear schedule.
    :param tuple betas: Explicit betas of a tabulated schedule.
    :param bool zero_terminal_snr: Apply :func:`rescale_zero_terminal_snr` after construction.
    """
    family: str
    T: int
    tau: float = None
    beta_1: float = None
    beta_T: float = None
    betas: tuple = None
    zero_terminal_snr: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError("Unknown schedule family {0!r}".format(self.family))
        if int(self.T) != self.T or self.T < 1:
            raise DomainError("T must be an integer >= 1, got {0}".format(self.T))
        object.__setattr__(self, 'T', int(self.T))
        if self.family in ('cosine', 'sigmoid'):
            if self.tau is None or not self.tau > 0:
                raise DomainError("{0} schedules need tau > 0, got {1}".format(self.family, self.tau))
            object.__setattr__(self, 'tau', float(self.tau))
        elif self.tau is not None:
            raise DomainError("tau is not defined for {0} schedules".format(self.family))
        if self.family == 'linear':
            beta_1 = DEFAULT_BETA_1 if self.beta_1 is None else float(self.beta_1)
            beta_T = DEFAULT_BETA_T if self.beta_T is None else float(self.beta_T)
            if not 0 < beta_1 <= beta_T < 1:
                raise DomainError("Linear endpoints must satisfy 0 < beta_1 <= beta_T < 1, "
                                  "got {0}, {1}".format(beta_1, beta_T))
            object.__setattr__(self, 'beta_1', beta_1)
            object.__setattr__(self, 'beta_T', beta_T)
        if self.family == 'tabulated':
            if self.betas is None or len(self.betas) != self.T:
                raise DomainError("Tabulated schedules need exactly T betas")
            object.__setattr__(self, 'betas', tuple(float(b) for b in self.betas))

    @property
    def label(self):
        if self.family == 'linear':
            text = 'Lin({0})'.format(self.T)
        elif self.family == 'cosine':
            text = 'Cos({0},{1})'.format(self.T, self.tau)
        elif self.family == 'sigmoid':
            text = 'Sig({0},{1})'.format(self.T, self.tau)
        else:
            text = 'Table({0})'.format(self.T)
        return text + ('+Zero' if self.zero_terminal_snr else '')

    def sort_key(self):
        """
        Tie-break order of the ranking: smaller T, then family order, then smaller tau.
        """
        return self.T, FAMILY_ORDER[self.family], self.tau if self.tau is not None else 0.0

    def to_string(self):
        """
        Spec-string form, e.g. ``cos:T=75,tau=2.0``. Tabulated specs list no betas.
        """
        parts = ['T={0}'.format(self.T)]
        if self.tau is not None:
            parts.append('tau={0}'.format(self.tau))
        if self.family == 'linear' and (self.beta_1 != DEFAULT_BETA_1 or self.beta_T != DEFAULT_BETA_T):
            parts.append('beta_1={0!r}'.format(self.beta_1))
            parts.append('beta_T={0!r}'.format(self.beta_T))
        if self.zero_terminal_snr:
            parts.append('zero=1')
        return '{0}:{1}'.format(_SHORT[self.family], ','.join(parts))

    def __str__(self):
        return self.label


@dataclass(frozen=True, eq=False)
class Schedule:
    """
    A realized schedule. All arrays have length T and are read-only.
    """
    spec: ScheduleSpec
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    posterior_var: np.ndarray

    @property
    def T(self):
        return self.spec.T

    def alpha_bar_prev(self, t):
        """
        alpha_bar_{t-1} with the alpha_bar_0 = 1 convention (t is 1-based).
        """
        return 1.0 if t == 1 else float(self.alpha_bar[t - 2])

    def to_dict(self):
        return {'family': self.spec.family, 'tau': self.spec.tau, 'T': self.spec.T,
                'zero_terminal_snr': self.spec.zero_terminal_snr,
                'beta': self.beta.tolist(), 'alpha_bar': self.alpha_bar.tolist(),
                'posterior_var': self.posterior_var.tolist()}


def _build(spec, beta, alpha_bar=None):
    beta = np.array(beta, dtype=float)
    alpha = 1.0 - beta
    if alpha_bar is None:
        alpha_bar = np.cumprod(alpha)
    else:
        alpha_bar = np.array(alpha_bar, dtype=float)
    alpha_bar_prev = np.concatenate(([1.0], alpha_bar[:-1]))
    # alpha_bar can round to 1 for betas below machine precision; sigma_t^2 is 0 there
    denominator = 1.0 - alpha_bar
    posterior_var = np.zeros_like(beta)
    np.divide((1.0 - alpha_bar_prev) * beta, denominator, out=posterior_var, where=denominator > 0)
    for array in (beta, alpha, alpha_bar, posterior_var):
        array.setflags(write=False)
    return Schedule(spec, beta, alpha, alpha_bar, posterior_var)


def _betas_from_alpha_bar(alpha_bar):
    alpha_bar_prev = np.concatenate(([1.0], alpha_bar[:-1]))
    return np.minimum(1.0 - alpha_bar / alpha_bar_prev, BETA_CLAMP)


def make_linear(T, beta_1=DEFAULT_BETA_1, beta_T=DEFAULT_BETA_T):
    """
    Linear schedule: betas equally spaced from beta_1 to beta_T inclusive.

    :raise DomainError: If 0 < beta_1 <= beta_T < 1 does not hold or T < 1.
    """
    spec = ScheduleSpec('linear', T, beta_1=beta_1, beta_T=beta_T)
    return _build(spec, np.linspace(spec.beta_1, spec.beta_T, spec.T))


def cosine_alpha_bar(T, tau):
    """
    Squared-cosine alpha_bar at t = 0..T (offset 0.008), raised to the temperature tau.
    """
    steps = np.arange(T + 1, dtype=float)
    f = np.cos(((steps / T + COSINE_OFFSET) / (1.0 + COSINE_OFFSET)) * math.pi / 2.0) ** 2
    return (f / f[0]) ** tau


def make_cosine(T, tau):
    """
    Cosine schedule with temperature applied as an exponent on alpha_bar; tau = 1 is the standard
    squared-cosine schedule. Betas are clamped to <= 0.999.
    """
    spec = ScheduleSpec('cosine', T, tau=tau)
    return _build(spec, _betas_from_alpha_bar(cosine_alpha_bar(spec.T, spec.tau)[1:]))


def sigmoid_alpha_bar(T, tau):
    """
    Logistic alpha_bar at t = 0..T over the logit range [-3, 3], affinely normalized to
    alpha_bar(0) = 1 and alpha_bar(T) = 0.
    """
    u = np.arange(T + 1, dtype=float) / T

    def g(v):
        return expit(-(SIGMOID_START + v * (SIGMOID_END - SIGMOID_START)) / tau)

    return (g(u) - g(1.0)) / (g(0.0) - g(1.0))


def make_sigmoid(T, tau):
    """
    Sigmoid schedule; smaller tau gives a steeper transition around the middle step.
    """
    spec = ScheduleSpec('sigmoid', T, tau=tau)
    return _build(spec, _betas_from_alpha_bar(sigmoid_alpha_bar(spec.T, spec.tau)[1:]))


def from_table(betas):
    """
    Schedule from an explicit list of betas (for externally designed candidates).

    :raise DomainError: If the list is empty or any beta lies outside (0, 1).
    """
    betas = [float(b) for b in betas]
    if len(betas) == 0:
        raise DomainError("Empty beta table")
    bad = [b for b in betas if not 0.0 < b < 1.0]
    if bad:
        raise DomainError("Tabulated betas must lie in (0, 1), got {0}".format(bad[:5]))
    return _build(ScheduleSpec('tabulated', len(betas), betas=tuple(betas)), betas)


def rescale_zero_terminal_snr(schedule):
    """
    Affinely rescale sqrt(alpha_bar) so the last step carries no signal, keeping the first step.
    The exact zero at step T is replaced by a floor of 1e-6 on sqrt(alpha_bar).

    :raise DomainError: If alpha_bar_T >= alpha_bar_1.
    """
    root = np.sqrt(schedule.alpha_bar)
    first, last = root[0], root[-1]
    if not last < first:
        raise DomainError("Zero-terminal-SNR rescale needs alpha_bar_T < alpha_bar_1")
    rescaled = (root - last) * first / (first - last)
    rescaled[-1] = ZERO_SNR_FLOOR
    alpha_bar = rescaled ** 2
    alpha_bar_prev = np.concatenate(([1.0], alpha_bar[:-1]))
    beta = 1.0 - alpha_bar / alpha_bar_prev
    if not np.all((beta > 0) & (beta < 1)):
        raise DomainError("Rescaled schedule {0} is degenerate".format(schedule.spec.label))
    return _build(replace(schedule.spec, zero_terminal_snr=True), beta, alpha_bar=alpha_bar)


def posterior_variance_sum(schedule):
    """
    Sum of the posterior variances sigma_1^2 + ... + sigma_T^2.
    """
    return float(np.sum(schedule.posterior_var))


def build_schedule(spec):
    """
    Realize a :class:`ScheduleSpec`.
    """
    if spec.family == 'linear':
        schedule = make_linear(spec.T, spec.beta_1, spec.beta_T)
    elif spec.family == 'cosine':
        schedule = make_cosine(spec.T, spec.tau)
    elif spec.family == 'sigmoid':
        schedule = make_sigmoid(spec.T, spec.tau)
    else:
        schedule = from_table(spec.betas)
    if spec.zero_terminal_snr:
        schedule = rescale_zero_terminal_snr(schedule)
    return schedule


def candidate_grid():
    """
    The default 35 candidates: 5 linear, 15 cosine and 15 sigmoid schedules over T in
    {10, 20, 50, 75, 100}.
    """
    grid = [ScheduleSpec('linear', T) for T in GRID_STEPS]
    grid += [ScheduleSpec('cosine', T, tau=tau) for T in GRID_STEPS for tau in COSINE_TAUS]
    grid += [ScheduleSpec('sigmoid', T, tau=tau) for T in GRID_STEPS for tau in SIGMOID_TAUS]
    return grid


def load_betas(path):
    """
    Read betas from a JSON file holding either a bare list or an object with a ``beta`` list
    (the format written by :func:`save_schedule`).
    """
    with open(path, 'r', encoding='utf-8') as handle:
        payload = json.load(handle)
    if isinstance(payload, dict):
        if 'beta' not in payload:
            raise ParseError("Schedule file {0} has no 'beta' list".format(path))
        payload = payload['beta']
    if not isinstance(payload, list):
        raise ParseError("Schedule file {0} must hold a list of betas".format(path))
    return payload


def parse_schedule_spec(text):
    """
    Parse a spec string such as ``lin:T=100``, ``cos:T=75,tau=2.0``, ``sig:T=50,tau=0.5``,
    ``lin:T=50,beta_1=1e-4,beta_T=0.05``, ``table:@betas.json`` or ``cos:T=50,tau=1.0,zero=1``.

    :raise ParseError: On malformed strings.
    """
    text = text.strip()
    if ':' not in text:
        raise ParseError("Schedule spec {0!r} must look like 'family:key=value,...'".format(text))
    head, body = text.split(':', 1)
    family = _FAMILY_ALIASES.get(head.strip().lower())
    if family is None:
        raise ParseError("Unknown schedule family {0!r} in {1!r}".format(head, text))

    if family == 'tabulated':
        path, _, rest = body.partition(',')
        if not path.startswith('@'):
            raise ParseError("Tabulated specs need a file reference 'table:@file.json'")
        betas = load_betas(path[1:])
        zero = rest.strip() in ('zero=1', 'zero=true')
        return ScheduleSpec('tabulated', len(betas), betas=tuple(betas), zero_terminal_snr=zero)

    options = {}
    for item in filter(None, (p.strip() for p in body.split(','))):
        key, sep, value = item.partition('=')
        if not sep:
            raise ParseError("Malformed option {0!r} in {1!r}".format(item, text))
        options[key.strip()] = value.strip()
    try:
        T = int(options.pop('T'))
        tau = float(options.pop('tau')) if 'tau' in options else None
        beta_1 = float(options.pop('beta_1')) if 'beta_1' in options else None
        beta_T = float(options.pop('beta_T')) if 'beta_T' in options else None
        zero = options.pop('zero', '0').lower() in ('1', 'true', 'yes')
    except KeyError:
        raise ParseError("Schedule spec {0!r} needs T=".format(text))
    except ValueError as verr:
        raise ParseError("Bad number in schedule spec {0!r}: {1}".format(text, verr))
    if options:
        raise ParseError("Unknown options {0} in schedule spec {1!r}".format(sorted(options), text))
    return ScheduleSpec(family, T, tau=tau, beta_1=beta_1, beta_T=beta_T, zero_terminal_snr=zero)


def save_schedule(schedule, path):
    """
    Write the JSON form {family, tau, T, beta[], alpha_bar[], posterior_var[]}.
    """
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(schedule.to_dict(), handle, indent=2)
