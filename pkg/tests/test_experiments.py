import unittest
import os
import tempfile
import matplotlib
matplotlib.use('Agg')
import numpy as np
from numpy.testing import assert_allclose
from pyDiffSchedules import ScheduleSpec, ToyDenoiser, generate_ar1, make_linear, rank
from pyDiffSchedules.DiffusionProcess import ZeroNoisePredictor
from pyDiffSchedules.Experiments import (ProxyConfig, artifact_name, crps, curve_dispersion, de_ablation,
                                         generation_trace, plot_generation_trace, plot_scan, proxy_accuracy_scan,
                                         proxy_step_classification, quantile_loss, relative_spread, robustness_scan,
                                         selection_agreement, zero_snr_comparison)
from pyDiffSchedules.AntScore import NonStationarityCurve
from pyDiffSchedules.ToyDenoiser import DenoiserConfig
from pyDiffSchedules.utils import DomainError

"""

Suite of tests for the schedule studies: proxy task, step-embedding ablation, robustness scans,
generation traces and CRPS.

"""


class TestForecastMetrics(unittest.TestCase):

    def test_quantileLoss(self):
        assert_allclose(quantile_loss(0.0, 1.0, 0.9), 0.9)
        assert_allclose(quantile_loss(2.0, 1.0, 0.9), 0.1)
        assert_allclose(quantile_loss(np.array([0.0, 2.0]), 1.0, 0.5), [0.5, 0.5])

    def test_crps(self):
        self.assertAlmostEqual(crps(np.zeros((20, 1)), np.array([1.0])), 1.0)
        self.assertAlmostEqual(crps(np.zeros(20), 1.0), 1.0)
        self.assertAlmostEqual(crps(np.tile([0.5, -2.0], (10, 1)), np.array([0.5, -2.0])), 0.0)
        with self.assertRaises(DomainError):
            crps(np.zeros((0, 3)), np.zeros(3))

    def test_crpsProperties(self):
        rng = np.random.default_rng(0)
        samples = rng.standard_normal((50, 8))
        y = rng.standard_normal(8)
        value = crps(samples, y)
        self.assertGreaterEqual(value, 0.0)
        self.assertAlmostEqual(crps(samples[rng.permutation(50)], y), value)


class TestHelpers(unittest.TestCase):

    def test_artifactName(self):
        self.assertEqual(artifact_name('proxy', 'ar1', ScheduleSpec('linear', 20), 0), 'proxy_ar1_Lin-20_seed0.json')
        self.assertEqual(artifact_name('score', 'm4', ScheduleSpec('cosine', 75, tau=2.0), 3, 'csv'),
                         'score_m4_Cos-75-2.0_seed3.csv')
        self.assertEqual(artifact_name('rank', 'ar1', seed=1, suffix=None), 'rank_ar1_seed1')

    def test_dispersion(self):
        first = NonStationarityCurve(np.array([5.0, 3.0, 1.0]))
        self.assertEqual(curve_dispersion([first]), 0.0)
        self.assertEqual(curve_dispersion([first, NonStationarityCurve(np.array([9.0, 5.0, 1.0]))]), 0.0)
        bent = NonStationarityCurve(np.array([5.0, 1.5, 1.0]))
        self.assertAlmostEqual(curve_dispersion([first, bent]), 0.5 - 0.5 / 4.0)

    def test_relativeSpread(self):
        self.assertAlmostEqual(relative_spread([2.0, 2.0, 2.0]), 0.0)
        self.assertAlmostEqual(relative_spread([1.0, 3.0]), 0.5)


class TestProxyTask(unittest.TestCase):

    def setUp(self):
        self.dataset = generate_ar1(0.99, n=64, length=256, seed=0, name='ar1')

    def test_proxyResult(self):
        config = ProxyConfig(window=32, n_windows=400, epochs=2)
        result = proxy_step_classification(self.dataset, make_linear(10), config)
        self.assertEqual(result.confusion.counts.shape, (10, 10))
        self.assertEqual(result.confusion.counts.sum(), 100)
        self.assertEqual(result.features.shape, (100, 4, 30))
        assert_allclose(result.confusion.class_counts, np.bincount(result.steps - 1, minlength=10))
        self.assertTrue(np.all((result.steps >= 1) & (result.steps <= 10)))
        again = proxy_step_classification(self.dataset, make_linear(10), config)
        assert_allclose(again.confusion.counts, result.confusion.counts)

    def test_singleStep(self):
        config = ProxyConfig(window=16, n_windows=100, epochs=1)
        self.assertEqual(proxy_step_classification(self.dataset, ScheduleSpec('linear', 1), config).accuracy, 1.0)

    def test_shortWindows(self):
        with self.assertRaises(DomainError):
            proxy_step_classification(self.dataset, make_linear(10), ProxyConfig(window=2))
        with self.assertRaises(DomainError):
            proxy_step_classification(self.dataset, make_linear(10), ProxyConfig(window=512))

    def test_linearBeatsCosine(self):
        """
        Steps of a linear schedule are easier to tell apart than those of a cosine schedule with tau = 2.
        """
        specs = [ScheduleSpec('linear', 20), ScheduleSpec('cosine', 20, tau=2.0)]
        table = proxy_accuracy_scan(self.dataset, specs, ProxyConfig(), seeds=range(5))
        medians = table.groupby('label')['accuracy'].median()
        self.assertGreater(medians['Lin(20)'], medians['Cos(20,2.0)'])


class TestRobustness(unittest.TestCase):

    def setUp(self):
        self.dataset = generate_ar1(0.95, n=32, length=256, seed=0, name='ar1')

    def test_cosineMoreRobust(self):
        scan = robustness_scan(self.dataset, families=('linear', 'cosine'))
        self.assertLess(scan.dispersion['cosine'], scan.dispersion['linear'])
        self.assertLess(scan.posterior_spread['cosine'], scan.posterior_spread['linear'])
        self.assertEqual(len(scan.summary), 10)
        self.assertEqual(len(scan.curves), 2 * (10 + 20 + 50 + 75 + 100))
        with tempfile.TemporaryDirectory() as tmpdir:
            paths = plot_scan(scan, os.path.join(tmpdir, 'scan'))
            self.assertEqual(len(paths), 2)
            self.assertTrue(all(os.path.exists(path) for path in paths))

    def test_singleT(self):
        scan = robustness_scan(self.dataset, families=('linear',), T_list=[20])
        self.assertEqual(scan.dispersion['linear'], 0.0)
        with self.assertRaises(DomainError):
            robustness_scan(self.dataset, T_list=[])


class TestDenoiserStudies(unittest.TestCase):

    def setUp(self):
        self.dataset = generate_ar1(0.95, n=32, length=128, seed=0, name='ar1')

    def _ablation_reports(self, schedule):
        return [de_ablation(self.dataset, schedule, DenoiserConfig(steps=800, seed=seed), n_eval=256, n_samples=16)
                for seed in range(5)]

    def test_embeddingAblation(self):
        """
        With a cosine schedule the step embedding lowers the held-out diffusion loss, and the loss gap it
        buys is larger than under a linear schedule, whose corrupted windows already reveal the step
        (medians over seeds).
        """
        reports = self._ablation_reports(ScheduleSpec('cosine', 50, tau=1.0))
        linear_reports = self._ablation_reports(ScheduleSpec('linear', 50))
        self.assertLess(np.median([report['gap'] for report in linear_reports]),
                        np.median([report['gap'] for report in reports]))
        with_de = np.median([report['with_de']['eval_loss'] for report in reports])
        without_de = np.median([report['without_de']['eval_loss'] for report in reports])
        self.assertLessEqual(with_de, without_de)
        for key in ('final_loss', 'eval_loss', 'iaat_distance'):
            self.assertTrue(np.isfinite(reports[0]['with_de'][key]))
        self.assertAlmostEqual(reports[0]['gap'], reports[0]['without_de']['eval_loss']
                               - reports[0]['with_de']['eval_loss'])

    def test_ablationDeterministic(self):
        config = DenoiserConfig(steps=20, seed=1)
        first = de_ablation(self.dataset, make_linear(20), config, n_eval=16, n_samples=4)
        second = de_ablation(self.dataset, make_linear(20), config, n_eval=16, n_samples=4)
        self.assertEqual(first, second)

    def test_generationTrace(self):
        schedule = make_linear(50)
        model = ToyDenoiser(window=32, steps=2000, random_state=0).fit(self.dataset, schedule)
        trace = generation_trace(model, schedule, n_samples=64, seed=0)
        self.assertEqual(len(trace), 51)
        self.assertEqual(trace['t'].tolist(), list(range(50, -1, -1)))
        self.assertTrue(np.all(np.isfinite(trace['value'])))
        self.assertLess(trace['value'].iloc[0], 1.5)
        self.assertGreater(trace['value'].iloc[-1], trace['value'].iloc[0])
        fig = plot_generation_trace(trace)
        self.assertEqual(len(fig.axes), 1)

    def test_traceNeedsWindow(self):
        with self.assertRaises(DomainError):
            generation_trace(ZeroNoisePredictor(), make_linear(10))
        trace = generation_trace(ZeroNoisePredictor(), make_linear(10), n_samples=8, window=16)
        self.assertEqual(len(trace), 11)


class TestSelectionStudies(unittest.TestCase):

    def setUp(self):
        self.dataset = generate_ar1(0.95, n=8, length=128, seed=0, name='ar1')
        self.candidates = [ScheduleSpec('linear', 10), ScheduleSpec('cosine', 20, tau=1.0),
                           ScheduleSpec('sigmoid', 20, tau=0.5)]

    def test_agreement(self):
        table, fraction = selection_agreement(self.dataset, self.candidates)
        self.assertEqual(len(table), 20)
        self.assertTrue(0.0 < fraction <= 1.0)
        default = table[(table['statistic'] == 'iaat') & (table['metric'] == 'auc')]['winner'].iloc[0]
        self.assertEqual(default, rank(self.dataset, self.candidates)[0][0].label)

    def test_zeroSnr(self):
        report = zero_snr_comparison(self.dataset, ScheduleSpec('cosine', 20, tau=1.0))
        self.assertEqual([entry['label'] for entry in report['results']], ['Cos(20,1.0)', 'Cos(20,1.0)+Zero'])
        assert_allclose(report['results'][1]['alpha_bar_T'], 1e-12)
        self.assertLess(report['results'][1]['alpha_bar_T'], report['results'][0]['alpha_bar_T'])


if __name__ == '__main__':
    unittest.main()
