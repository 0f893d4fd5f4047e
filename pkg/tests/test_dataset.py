import unittest
import os
import tempfile
import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from pyDiffSchedules import Dataset, TimeSeries, load_csv, to_csv, generate_ar1, generate_sine_mix
from pyDiffSchedules.TimeSeriesDataset import generate_from_spec, mean_scale, windows
from pyDiffSchedules.NonStationarity import evaluate_statistic
from pyDiffSchedules.utils import DegenerateScaleError, DomainError, ParseError, ShapeError

"""

Tests for the time series containers, the CSV readers and the synthetic generators.

"""


def _data_path(name):
    path = os.path.join(os.path.dirname(__file__), 'test_data', name)
    if not os.path.exists(path):
        import tests.gen_synthetic_datasets
    return path


class TestDatasetIO(unittest.TestCase):
    """

    Read the CSV fixtures and check the parsed datasets.

    """

    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmpdir.cleanup()

    def _write(self, text):
        path = os.path.join(self.tmpdir.name, 'data.csv')
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        return path

    def test_loadWide(self):
        dataset = load_csv(_data_path('ar1_wide.csv'))
        expected = generate_ar1(0.9, n=8, length=128, seed=35624)
        self.assertEqual(dataset.name, 'ar1_wide')
        self.assertEqual(len(dataset), 8)
        self.assertEqual(dataset.ids, ['s{0}'.format(i) for i in range(8)])
        assert_array_equal(dataset.as_matrix(), expected.as_matrix())

    def test_loadLong(self):
        dataset = load_csv(_data_path('sine_long.csv'), layout='long')
        expected = generate_sine_mix(4, 96, periods=[12, 24], noise_std=0.1, seed=35624)
        self.assertEqual(len(dataset), 4)
        assert_array_equal(dataset.as_matrix(), expected.as_matrix())

    def test_loadMultivariate(self):
        dataset = load_csv(_data_path('multivariate_wide.csv'))
        self.assertEqual(dataset.d, 2)
        self.assertEqual(len(dataset), 3)
        self.assertEqual(dataset.series[0].values.shape, (2, 64))
        with self.assertRaises(ShapeError):
            dataset.as_matrix()

    def test_writeReload(self):
        dataset = generate_ar1(0.5, n=3, length=20, seed=1, name='small')
        path = os.path.join(self.tmpdir.name, 'small.csv')
        to_csv(dataset, path)
        assert_array_equal(load_csv(path).as_matrix(), dataset.as_matrix())

    def test_trailingCellsShortenSeries(self):
        dataset = load_csv(self._write("id,v1,v2,v3\na,1,2,3\nb,4,5,\n"))
        self.assertEqual([ts.length for ts in dataset], [3, 2])

    def test_nonNumericCell(self):
        with self.assertRaises(ParseError) as context:
            load_csv(self._write("id,v1,v2\na,1,abc\n"))
        self.assertIn('abc', str(context.exception))

    def test_nonFiniteCell(self):
        with self.assertRaises(ParseError):
            load_csv(self._write("id,v1,v2\na,1,inf\n"))

    def test_raggedChannels(self):
        with self.assertRaises(ShapeError):
            load_csv(self._write("id,channel,v1,v2,v3\na,0,1,2,3\na,1,1,2,\n"))

    def test_unsortedLongLayout(self):
        with self.assertRaises(ParseError):
            load_csv(self._write("id,index,value\na,1,2.0\na,0,1.0\na,2,3.0\n"), layout='long')

    def test_longLayoutIndices(self):
        with self.assertRaises(ParseError) as context:
            load_csv(self._write("id,index,value\na,0.5,1\na,0.9,2\na,2,3\n"), layout='long')
        self.assertIn('row 2', str(context.exception))
        with self.assertRaises(ParseError):
            load_csv(self._write("id,index,value\na,0,1\na,1,2\na,1,3\n"), layout='long')
        dataset = load_csv(self._write("id,index,value\na,0,1\na,1.0,2\na,5,3\n"), layout='long')
        assert_array_equal(dataset.series[0].values, [1.0, 2.0, 3.0])

    def test_unknownLayout(self):
        with self.assertRaises(DomainError):
            load_csv(_data_path('ar1_wide.csv'), layout='tall')


class TestTimeSeries(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(DomainError):
            TimeSeries('a', [1.0])
        with self.assertRaises(DomainError):
            TimeSeries('a', [1.0, np.nan, 2.0])
        with self.assertRaises(DomainError):
            Dataset('empty', ())

    def test_readOnly(self):
        ts = TimeSeries('a', [1.0, 2.0, 3.0])
        with self.assertRaises(ValueError):
            ts.values[0] = 5.0

    def test_meanScale(self):
        ts = TimeSeries('a', [2.0, -4.0, 6.0])
        scaled, scale = mean_scale(ts)
        self.assertAlmostEqual(scale, 4.0)
        assert_allclose(scaled.values, [0.5, -1.0, 1.5])
        assert_allclose(np.mean(np.abs(scaled.values)), 1.0)
        scaled, scale = mean_scale(TimeSeries('b', [2.0, -2.0, 4.0]))
        self.assertAlmostEqual(scale, 8.0 / 3.0)
        assert_allclose(scaled.values, [0.75, -0.75, 1.5])
        with self.assertRaises(DegenerateScaleError):
            mean_scale(TimeSeries('z', [0.0, 0.0, 0.0]))


class TestGenerators(unittest.TestCase):

    def test_ar1Deterministic(self):
        first = generate_ar1(0.95, n=4, length=64, seed=3)
        second = generate_ar1(0.95, n=4, length=64, seed=3)
        assert_array_equal(first.as_matrix(), second.as_matrix())
        self.assertFalse(np.array_equal(first.as_matrix(), generate_ar1(0.95, n=4, length=64, seed=4).as_matrix()))

    def test_ar1Coefficient(self):
        values = generate_ar1(0.8, n=1, length=20000, seed=0).series[0].values
        centered = values - values.mean()
        rho1 = np.sum(centered[1:] * centered[:-1]) / np.sum(centered ** 2)
        self.assertAlmostEqual(rho1, 0.8, delta=0.02)

    def test_ar1Domain(self):
        with self.assertRaises(DomainError):
            generate_ar1(1.0, n=2, length=10, seed=0)

    def test_sineDomain(self):
        with self.assertRaises(DomainError):
            generate_sine_mix(2, 10, periods=[], noise_std=0.1, seed=0)
        with self.assertRaises(DomainError):
            generate_sine_mix(2, 10, periods=[1.0], noise_std=0.1, seed=0)

    def test_sineMix(self):
        clean = generate_sine_mix(3, 96, periods=[12, 24], noise_std=0.0, seed=1)
        self.assertEqual(len(clean), 3)
        for ts in clean:
            self.assertEqual(ts.length, 96)
            assert_allclose(ts.values[24:], ts.values[:-24], atol=1e-9)
        noisy = generate_sine_mix(8, 512, periods=[12, 24], noise_std=10.0, seed=1)
        values, _ = evaluate_statistic('iaat', noisy.as_matrix())
        self.assertLess(values.mean(), 1.3)

    def test_generatorStrings(self):
        dataset = generate_from_spec('ar1:phi=0.5,n=3,length=40', seed=2)
        self.assertEqual(len(dataset), 3)
        self.assertEqual(dataset.series[0].length, 40)
        assert_array_equal(dataset.as_matrix(), generate_ar1(0.5, 3, 40, 2).as_matrix())
        sine = generate_from_spec('sine:n=2,length=50,periods=24/168,noise=0.0', seed=0)
        self.assertEqual(sine.as_matrix().shape, (2, 50))
        with self.assertRaises(ParseError):
            generate_from_spec('walk:n=3', seed=0)
        with self.assertRaises(ParseError):
            generate_from_spec('ar1:phi=abc', seed=0)

    def test_windows(self):
        dataset = generate_ar1(0.5, n=3, length=40, seed=0)
        drawn = windows(dataset, 16, 10, np.random.default_rng(0))
        self.assertEqual(drawn.shape, (10, 16))
        with self.assertRaises(DomainError):
            windows(dataset, 41, 1, np.random.default_rng(0))


if __name__ == '__main__':
    unittest.main()
