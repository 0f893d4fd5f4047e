import unittest
import os
import tempfile
import matplotlib
matplotlib.use('Agg')
import numpy as np
from numpy.testing import assert_array_equal
from pyDiffSchedules import AntScheduleSelector, ScheduleSpec, generate_ar1, rank
from pyDiffSchedules.utils import DomainError

"""

Suite of tests to assess coherence and functionality of the AntScheduleSelector object.

"""


class TestAntScheduleSelector(unittest.TestCase):
    """

    Verify outputs of the AntScheduleSelector object

    """

    def setUp(self):
        self.dataset = generate_ar1(0.95, n=8, length=128, seed=2, name='ar1')
        self.candidates = [ScheduleSpec('linear', 10), ScheduleSpec('linear', 20), ScheduleSpec('cosine', 20, tau=1.0),
                           ScheduleSpec('cosine', 20, tau=2.0), ScheduleSpec('sigmoid', 20, tau=0.5)]
        self.selector = AntScheduleSelector(candidates=self.candidates, random_state=3)

    def test_fit(self):
        self.selector.fit(self.dataset)
        expected = rank(self.dataset, self.candidates, master_seed=3)
        self.assertEqual(self.selector.best_spec_, expected[0][0])
        self.assertEqual([spec for spec, _ in self.selector.ranking_], [spec for spec, _ in expected])
        self.assertEqual(self.selector.best_schedule_.spec, self.selector.best_spec_)
        self.assertEqual(set(self.selector.curves_), set(self.candidates))
        self.assertEqual(self.selector.dataset_name_, 'ar1')
        self.assertAlmostEqual(self.selector.score(), expected[0][1].score)
        self.assertEqual(len(self.selector.top(2)), 2)

    def test_maxSteps(self):
        selector = AntScheduleSelector(candidates=self.candidates, max_steps=10).fit(self.dataset)
        self.assertEqual(selector.best_spec_, ScheduleSpec('linear', 10))
        with self.assertRaises(DomainError):
            AntScheduleSelector(candidates=self.candidates, max_steps=5).fit(self.dataset)

    def test_notFitted(self):
        with self.assertRaises(AttributeError):
            self.selector.score()
        with self.assertRaises(AttributeError):
            self.selector.top()
        with self.assertRaises(AttributeError):
            self.selector.plot_curves()

    def test_scoreWithDataset(self):
        self.assertAlmostEqual(self.selector.score(self.dataset), self.selector.ranking_[0][1].score)

    def test_settersResetFit(self):
        self.selector.fit(self.dataset)
        self.selector.statistic = 'lag1ac'
        self.assertIsNone(self.selector.ranking_)
        self.assertFalse(self.selector._isfitted)
        self.selector.fit(self.dataset)
        self.selector.metric = 'mse'
        self.assertIsNone(self.selector.best_spec_)
        with self.assertRaises(DomainError):
            self.selector.statistic = 'hurst'
        with self.assertRaises(DomainError):
            AntScheduleSelector(metric='kl')

    def test_params(self):
        params = self.selector.get_params()
        self.assertEqual(params['statistic'], 'iaat')
        self.assertEqual(params['metric'], 'auc')
        self.assertEqual(params['random_state'], 3)

    def test_defaultGrid(self):
        selector = AntScheduleSelector(max_steps=10).fit(generate_ar1(0.9, n=4, length=64, seed=0))
        self.assertEqual(len(selector.ranking_), 7)
        self.assertTrue(all(spec.T == 10 for spec, _ in selector.ranking_))

    def test_plots(self):
        self.selector.fit(self.dataset)
        fig = self.selector.plot_curves()
        self.assertEqual(len(fig.axes), 1)
        with tempfile.TemporaryDirectory() as tmpdir:
            first, second = os.path.join(tmpdir, 'a.svg'), os.path.join(tmpdir, 'b.svg')
            self.selector.plot_curves(first, top=3)
            self.selector.plot_curves(second, top=3)
            with open(first, 'rb') as handle:
                first_bytes = handle.read()
            with open(second, 'rb') as handle:
                second_bytes = handle.read()
            self.selector.plot_ranking(os.path.join(tmpdir, 'ranking.svg'))
            self.assertTrue(os.path.exists(os.path.join(tmpdir, 'ranking.svg')))
        self.assertTrue(first_bytes.startswith(b'<?xml'))
        self.assertEqual(first_bytes, second_bytes)

    def test_curvesReproducible(self):
        first = AntScheduleSelector(candidates=self.candidates, random_state=3).fit(self.dataset)
        second = AntScheduleSelector(candidates=self.candidates, random_state=3, n_jobs=2).fit(self.dataset)
        for spec in self.candidates:
            assert_array_equal(first.curves_[spec].values, second.curves_[spec].values)


if __name__ == '__main__':
    unittest.main()
