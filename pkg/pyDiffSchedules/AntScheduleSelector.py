from sklearn.base import BaseEstimator

from .AntPlotMixin import AntPlotMixin
from .AntScore import DEFAULT_METRIC, DEFAULT_STATISTIC, METRICS, evaluate_candidates, order_results
from .NoiseSchedule import build_schedule, candidate_grid
from .NonStationarity import STATISTICS
from .utils import DomainError


class AntScheduleSelector(BaseEstimator, AntPlotMixin):
    """

    AntScheduleSelector object - Selects the noise schedule of a diffusion model for a given time series
    dataset by ranking candidate schedules with the ANT score.

    :param list candidates: :class:`ScheduleSpec` candidates, default the 35-schedule grid.
    :param str statistic: Non-stationarity statistic ('iaat', 'iat', 'lag1ac', 'varac', 'miaat').
    :param str metric: Discrepancy metric ('auc', 'mse', 'mae', 'corr', 'r2').
    :param int max_steps: Only candidates with T <= max_steps are considered.
    :param int draws: Corrupted trajectories per series.
    :param int random_state: Master seed.
    :param int n_jobs: joblib workers over candidates.
    :param str truncation: 'adaptive' or 'fixed' truncation of the integrated times.
    :raise DomainError: If the statistic or the metric is unknown.
    """

    def __init__(self, candidates=None, statistic=DEFAULT_STATISTIC, metric=DEFAULT_METRIC, max_steps=None, draws=1,
                 random_state=0, n_jobs=1, truncation='adaptive'):

        try:
            self.candidates = candidates
            self._statistic = self._check_statistic(statistic)
            self._metric = self._check_metric(metric)
            self.max_steps = max_steps
            self.draws = draws
            self.random_state = random_state
            self.n_jobs = n_jobs
            self.truncation = truncation
            self._reset()
        except DomainError as derr:
            raise derr

    def _reset(self):
        # Most initialized as None, before object is fitted.
        self.curves_ = None
        self.scores_ = None
        self.ranking_ = None
        self.best_spec_ = None
        self.best_schedule_ = None
        self.dataset_name_ = None
        self._isfitted = False

    @staticmethod
    def _check_statistic(statistic):
        if statistic not in STATISTICS:
            raise DomainError("Unknown statistic {0!r}, use one of {1}".format(statistic, sorted(STATISTICS)))
        return statistic

    @staticmethod
    def _check_metric(metric):
        if metric not in METRICS:
            raise DomainError("Unknown metric {0!r}, use one of {1}".format(metric, METRICS))
        return metric

    def fit(self, dataset):
        """

        Score every candidate on the dataset and rank them.

        :param Dataset dataset: Time series to fit the schedule to.
        :return: Fitted selector.
        :rtype: pyDiffSchedules.AntScheduleSelector
        :raise DomainError: If no candidate survives the ``max_steps`` filter.
        """
        try:
            self._reset()
            candidates = self.candidates if self.candidates is not None else candidate_grid()
            results = evaluate_candidates(dataset, candidates, self.statistic, self.metric, self.max_steps,
                                          self.random_state, self.draws, self.n_jobs, truncation=self.truncation)
            self.curves_ = {spec: candidate_curve for spec, candidate_curve, _ in results}
            self.scores_ = {spec: score for spec, _, score in results}
            self.ranking_ = [(spec, score) for spec, _, score in order_results(results)]
            self.best_spec_ = self.ranking_[0][0]
            self.best_schedule_ = build_schedule(self.best_spec_)
            self.dataset_name_ = dataset.name
            self._isfitted = True
            return self
        except DomainError as derr:
            raise derr

    def score(self, dataset=None):
        """

        ANT score of the selected schedule (fits first when a dataset is given).

        :rtype: float
        :raise AttributeError: If the selector is not fitted and no dataset is given.
        """
        if dataset is not None:
            self.fit(dataset)
        if self._isfitted is False:
            raise AttributeError("Selector is not fitted")
        return self.ranking_[0][1].score

    def top(self, k=5):
        """
        The ``k`` best (spec, AntScore) pairs.
        """
        if self._isfitted is False:
            raise AttributeError("Selector is not fitted")
        return self.ranking_[:k]

    @property
    def statistic(self):
        try:
            return self._statistic
        except AttributeError as atre:
            raise atre

    @statistic.setter
    def statistic(self, statistic):
        """

        Setter for the statistic; resets the fitted state.

        :param str statistic: Statistic name.
        :raise DomainError: If the statistic is unknown.
        """
        self._statistic = self._check_statistic(statistic)
        self._reset()

    @property
    def metric(self):
        try:
            return self._metric
        except AttributeError as atre:
            raise atre

    @metric.setter
    def metric(self, metric):
        """

        Setter for the discrepancy metric; resets the fitted state.

        :param str metric: Metric name.
        :raise DomainError: If the metric is unknown.
        """
        self._metric = self._check_metric(metric)
        self._reset()
