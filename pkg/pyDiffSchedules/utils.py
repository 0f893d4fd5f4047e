"""
Shared exceptions and seeding helpers used across the pyDiffSchedules objects.

"""

import logging

import numpy as np

logger = logging.getLogger(__name__)


class DomainError(ValueError):
    """
    Raised when a parameter lies outside the domain where the operation is defined.
    """
    pass


class ParseError(ValueError):
    """
    Raised when a file or a schedule or generator string cannot be parsed.
    """
    pass


class ShapeError(ValueError):
    """
    Raised for ragged or mutually inconsistent array shapes.
    """
    pass


class DegenerateScaleError(DomainError):
    """
    Raised when a scale factor would be zero (for example, an all-zero series).
    """
    pass


class NumericError(ArithmeticError):
    """
    Raised when a computation produces non-finite values.

    :param str message: Description of the failure.
    :param int step: Diffusion step (or iteration) at which the failure happened, if known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DivergenceError(NumericError):
    """
    Raised when a training loop diverges. The loss trace up to the failure is kept in ``trace``.
    """

    def __init__(self, message, step=None, trace=None):
        super().__init__(message, step=step)
        self.trace = trace if trace is not None else []


def derive_rng(master_seed, *keys):
    """
    Independent random generator keyed by a master seed and a tuple of non-negative integers.

    The same (master_seed, keys) always produce the same stream, whatever the evaluation order,
    which is what makes the parallel curve computations order-independent.

    :param int master_seed: Master seed of the run.
    :param keys: Additional integer keys (series index, draw index, ...).
    :return: A numpy random generator.
    :rtype: numpy.random.Generator
    """
    entropy = [int(master_seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise DomainError("Seeds and rng keys must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def check_finite(array, what, step=None):
    """
    Raise :class:`NumericError` if ``array`` contains NaN or infinite values.
    """
    if not np.all(np.isfinite(array)):
        if step is None:
            raise NumericError("Non-finite values in {0}".format(what))
        raise NumericError("Non-finite values in {0} at step {1}".format(what, step), step=step)
    return array
