import unittest
import matplotlib
matplotlib.use('Agg')
import numpy as np
from numpy.testing import assert_allclose
from pyDiffSchedules import ProxyStepClassifier
from pyDiffSchedules.ProxyStepClassifier import ConfusionMatrix, classifier_loss_and_grads, init_classifier
from pyDiffSchedules.utils import DomainError, ShapeError

"""

Suite of tests for the convolutional step classifier.

"""


class TestConfusionMatrix(unittest.TestCase):

    def test_accuracy(self):
        confusion = ConfusionMatrix.from_predictions([0, 0, 1, 2, 2], [0, 1, 1, 2, 0], 3)
        assert_allclose(confusion.counts, [[1, 1, 0], [0, 1, 0], [1, 0, 1]])
        self.assertAlmostEqual(confusion.accuracy, 0.6)
        assert_allclose(confusion.class_counts, [2, 1, 2])
        self.assertEqual(ConfusionMatrix(np.zeros((2, 2))).accuracy, 0.0)

    def test_validation(self):
        with self.assertRaises(ShapeError):
            ConfusionMatrix(np.zeros((2, 3)))
        with self.assertRaises(ShapeError):
            ConfusionMatrix(np.array([[1, -1], [0, 0]]))


class TestClassifierNetwork(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_initialization(self):
        params = init_classifier(16, 5, rng=np.random.default_rng(0))
        self.assertEqual(params['K'].shape, (4, 3))
        self.assertEqual(params['W'].shape, (4 * 14, 5))
        with self.assertRaises(DomainError):
            init_classifier(2, 5)

    def test_gradients(self):
        """
        Directional derivatives of the cross-entropy match central differences at 20 random points.
        """
        h = 1e-7
        for point in range(20):
            params = init_classifier(16, 5, rng=np.random.default_rng(point))
            X = self.rng.standard_normal((8, 16))
            y = self.rng.integers(0, 5, size=8)
            _, grads = classifier_loss_and_grads(params, X, y)
            analytic, numeric = [], []
            for _ in range(4):
                direction = {name: self.rng.standard_normal(value.shape) for name, value in params.items()}
                plus = {name: params[name] + h * direction[name] for name in params}
                minus = {name: params[name] - h * direction[name] for name in params}
                numeric.append((classifier_loss_and_grads(plus, X, y)[0]
                                - classifier_loss_and_grads(minus, X, y)[0]) / (2 * h))
                analytic.append(sum(np.sum(grads[name] * direction[name]) for name in params))
            analytic, numeric = np.array(analytic), np.array(numeric)
            self.assertLess(np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric), 1e-4, point)


class TestProxyStepClassifier(unittest.TestCase):
    """

    Windows of white noise whose class is the noise level.

    """

    def setUp(self):
        rng = np.random.default_rng(35624)
        levels = np.array([0.2, 1.0, 5.0])
        self.y = rng.integers(0, 3, size=600)
        self.X = levels[self.y][:, np.newaxis] * rng.standard_normal((600, 32))
        self.classifier = ProxyStepClassifier(epochs=20, random_state=0)

    def test_fit(self):
        self.classifier.fit(self.X[:450], self.y[:450], n_classes=3)
        confusion = self.classifier.confusion(self.X[450:], self.y[450:])
        self.assertEqual(confusion.counts.shape, (3, 3))
        self.assertEqual(confusion.counts.sum(), 150)
        self.assertGreater(confusion.accuracy, 0.6)
        proba = self.classifier.predict_proba(self.X[:5])
        assert_allclose(proba.sum(axis=1), 1.0)
        self.assertTrue(set(self.classifier.predict(self.X)) <= {0, 1, 2})
        self.assertEqual(self.classifier.transform(self.X[:5]).shape, (5, 4, 30))

    def test_deterministic(self):
        first = ProxyStepClassifier(epochs=2, random_state=4).fit(self.X, self.y)
        second = ProxyStepClassifier(epochs=2, random_state=4).fit(self.X, self.y)
        assert_allclose(first.decision_function(self.X[:10]), second.decision_function(self.X[:10]))
        self.assertEqual(first.loss_trace_, second.loss_trace_)

    def test_notFitted(self):
        with self.assertRaises(AttributeError):
            self.classifier.predict(self.X)

    def test_labelMismatch(self):
        with self.assertRaises(ShapeError):
            self.classifier.fit(self.X, self.y[:10])

    def test_plotConfusion(self):
        self.classifier.set_params(epochs=1)
        self.classifier.fit(self.X, self.y)
        fig = self.classifier.plot_confusion(self.classifier.confusion(self.X, self.y))
        self.assertIn('Accuracy', fig.axes[0].get_title())


if __name__ == '__main__':
    unittest.main()
