import numpy
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted, FLOAT_DTYPES

from .utils import DegenerateScaleError

"""

Row-wise counterpart of the column scalers in scikit-learn: every row of the data matrix is one series,
and each series is divided by the mean of its absolute values.

"""


class MeanAbsScaler(TransformerMixin, BaseEstimator):
    """
    Mean scaling of time series. Each row (series) is divided by the mean of the absolute values
    of its observations, raised to ``scale_power``.

    :param scale_power: Power applied to the mean absolute value. 1: mean scaling; 0: no scaling.
    :type scale_power: Float
    :param bool copy: Copy the array containing the data.
    """

    def __init__(self, scale_power=1, copy=True):
        self.scale_power = scale_power
        self.copy = copy

    def _reset(self):
        """
        Reset internal data-dependent state of the scaler, if necessary.
        __init__ parameters are not touched.

        """
        if hasattr(self, 'scale_'):
            del self.scale_
            del self.n_series_seen_

    def fit(self, X, y=None):
        """
        Compute the per-series mean absolute value to use in later scaling operations.

        :param X: Data matrix to scale, one series per row.
        :type X: numpy.ndarray, shape [n_series, length]
        :param y: Passthrough for Scikit-learn ``Pipeline`` compatibility.
        :type y: None
        :return: Fitted object.
        :rtype: pyDiffSchedules.MeanAbsScaler
        :raise DegenerateScaleError: If any series is all zeros.
        """
        self._reset()
        X = check_array(X, copy=self.copy, estimator=self, dtype=FLOAT_DTYPES)

        mean_abs = numpy.mean(numpy.abs(X), axis=1)
        self.scale_ = _check_zeros_in_scale(mean_abs) ** self.scale_power
        self.n_series_seen_ = X.shape[0]
        return self

    def transform(self, X, y=None, copy=None):
        """
        Divide each series by its fitted scale.

        :param X: Data matrix to scale.
        :type X: numpy.ndarray, shape [n_series, length]
        :param y: Passthrough for scikit-learn ``Pipeline`` compatibility.
        :type y: None
        :param bool copy: Copy the X matrix.
        :return: Scaled version of the X data matrix.
        :rtype: numpy.ndarray, shape [n_series, length]
        :raise ValueError: If the number of series differs from the fitted one.
        """
        check_is_fitted(self, 'scale_')

        copy = copy if copy is not None else self.copy
        X = check_array(X, copy=copy, estimator=self, dtype=FLOAT_DTYPES)
        if X.shape[0] != self.n_series_seen_:
            raise ValueError("Scaler fitted on {0} series, got {1}".format(self.n_series_seen_, X.shape[0]))
        X /= self.scale_[:, numpy.newaxis]
        return X

    def inverse_transform(self, X, copy=None):
        """
        Scale back the data to the original representation.

        :param X: Scaled data matrix.
        :type X: numpy.ndarray, shape [n_series, length]
        :param bool copy: Copy the X data matrix.
        :return: X data matrix with the scaling operation reverted.
        :rtype: numpy.ndarray, shape [n_series, length]
        """
        check_is_fitted(self, 'scale_')

        copy = copy if copy is not None else self.copy
        X = numpy.asarray(X, dtype=float)
        if copy:
            X = X.copy()
        X *= self.scale_[:, numpy.newaxis]
        return X


def _check_zeros_in_scale(scale):
    """
    Whenever a scale is zero the series is all zeros and cannot be mean-scaled.
    """
    zero_rows = numpy.flatnonzero(scale == 0.0)
    if zero_rows.size > 0:
        raise DegenerateScaleError("Cannot mean-scale all-zero series (rows {0})".format(zero_rows.tolist()))
    return scale
