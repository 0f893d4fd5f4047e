"""
Diffusion-step classifier for the proxy task: given a corrupted window, predict the step t it
was corrupted to. A model that reaches high accuracy can tell the steps apart without a step
embedding.

Architecture: Conv1D (1 -> 4 channels, kernel 3, stride 1, no padding) -> ReLU -> Flatten ->
Linear -> softmax, trained with cross-entropy and Adam on hand-written gradients.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import log_softmax, softmax
from sklearn import metrics
from sklearn.base import BaseEstimator, ClassifierMixin

from .PlotMixin import PlotMixin, save_svg
from .ToyDenoiser import AdamOptimizer
from .utils import DomainError, ShapeError, check_finite

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """
    Counts[i, j] = number of evaluation windows of class i predicted as class j.
    """
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=int)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or np.any(counts < 0):
            raise ShapeError("A confusion matrix is a square array of non-negative counts")
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)

    @property
    def accuracy(self):
        total = self.counts.sum()
        return float(np.trace(self.counts) / total) if total > 0 else 0.0

    @property
    def class_counts(self):
        return self.counts.sum(axis=1)

    @classmethod
    def from_predictions(cls, y_true, y_pred, n_classes):
        return cls(metrics.confusion_matrix(y_true, y_pred, labels=np.arange(n_classes)))


def init_classifier(window, n_classes, channels=4, kernel_size=3, rng=None):
    """
    He-initialized convolution and linear read-out, zero biases.

    :raise DomainError: If the window is shorter than the kernel.
    """
    if window < kernel_size:
        raise DomainError("Window of length {0} is shorter than the kernel ({1})".format(window, kernel_size))
    rng = np.random.default_rng(0) if rng is None else rng
    n_features = channels * (window - kernel_size + 1)
    return {'K': rng.standard_normal((channels, kernel_size)) * np.sqrt(2.0 / kernel_size),
            'bk': np.zeros(channels),
            'W': rng.standard_normal((n_features, n_classes)) * np.sqrt(2.0 / n_features),
            'b': np.zeros(n_classes)}


def _classifier_forward(params, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    kernel_size = params['K'].shape[1]
    if X.shape[1] < kernel_size:
        raise DomainError("Windows of length {0} are shorter than the kernel".format(X.shape[1]))
    patches = sliding_window_view(X, kernel_size, axis=1)
    conv = np.einsum('bjk,ck->bcj', patches, params['K']) + params['bk'][np.newaxis, :, np.newaxis]
    activations = np.maximum(conv, 0.0)
    features = activations.reshape(X.shape[0], -1)
    if features.shape[1] != params['W'].shape[0]:
        raise ShapeError("Classifier built for {0} features, got {1}".format(params['W'].shape[0],
                                                                            features.shape[1]))
    logits = features @ params['W'] + params['b']
    return logits, (patches, conv, activations, features)


def classifier_loss_and_grads(params, X, y):
    """
    Mean softmax cross-entropy and its exact gradients.

    :param dict params: Classifier parameters.
    :param numpy.ndarray X: Windows [n, window].
    :param numpy.ndarray y: Class indices [n].
    """
    logits, (patches, conv, activations, features) = _classifier_forward(params, X)
    y = np.asarray(y, dtype=int)
    n = logits.shape[0]
    loss = float(-np.mean(log_softmax(logits, axis=1)[np.arange(n), y]))
    d_logits = softmax(logits, axis=1)
    d_logits[np.arange(n), y] -= 1.0
    d_logits /= n
    grads = {'W': features.T @ d_logits, 'b': d_logits.sum(axis=0)}
    d_conv = (d_logits @ params['W'].T).reshape(conv.shape) * (conv > 0)
    grads['K'] = np.einsum('bcj,bjk->ck', d_conv, patches)
    grads['bk'] = d_conv.sum(axis=(0, 2))
    return loss, grads


class ProxyStepClassifier(ClassifierMixin, BaseEstimator, PlotMixin):
    """

    ProxyStepClassifier object - Convolutional classifier of the diffusion step of corrupted windows.

    :param int channels: Convolution output channels.
    :param int kernel_size: Convolution kernel size.
    :param float lr: Adam learning rate.
    :param int epochs: Passes over the training windows.
    :param int batch: Mini-batch size.
    :param int random_state: Seed of the initialization and of the shuffling.
    """

    def __init__(self, channels=4, kernel_size=3, lr=1e-2, epochs=30, batch=64, random_state=0):
        self.channels = channels
        self.kernel_size = kernel_size
        self.lr = lr
        self.epochs = epochs
        self.batch = batch
        self.random_state = random_state
        self.params_ = None
        self.classes_ = None
        self.loss_trace_ = None
        self._isfitted = False

    def fit(self, X, y, n_classes=None):
        """

        Train on windows ``X`` with step classes ``y`` in 0..n_classes-1.

        :param numpy.ndarray X: Corrupted windows [n, window].
        :param numpy.ndarray y: Class indices (t - 1).
        :param int n_classes: Number of classes T, default max(y) + 1.
        :return: Fitted classifier.
        :rtype: pyDiffSchedules.ProxyStepClassifier
        """
        try:
            X = np.atleast_2d(np.asarray(X, dtype=float))
            y = np.asarray(y, dtype=int)
            if X.shape[0] != y.size:
                raise ShapeError("{0} windows for {1} labels".format(X.shape[0], y.size))
            n_classes = int(y.max()) + 1 if n_classes is None else n_classes
            rng = np.random.default_rng(self.random_state)
            params = init_classifier(X.shape[1], n_classes, self.channels, self.kernel_size, rng)
            optimizer = AdamOptimizer(lr=self.lr)
            trace = []
            for epoch in range(self.epochs):
                order = rng.permutation(X.shape[0])
                for start in range(0, X.shape[0], self.batch):
                    rows = order[start:start + self.batch]
                    loss, grads = classifier_loss_and_grads(params, X[rows], y[rows])
                    check_finite(np.array(loss), 'classifier loss', step=epoch)
                    trace.append(loss)
                    params = optimizer.step(params, grads)
            self.params_ = params
            self.classes_ = np.arange(n_classes)
            self.loss_trace_ = trace
            self._isfitted = True
            logger.debug("Proxy classifier trained: %d windows, %d classes", X.shape[0], n_classes)
            return self
        except ValueError as verr:
            raise verr

    def _check_fitted(self):
        if self._isfitted is False:
            raise AttributeError("Classifier is not fitted")

    def decision_function(self, X):
        self._check_fitted()
        return _classifier_forward(self.params_, X)[0]

    def predict_proba(self, X):
        return softmax(self.decision_function(X), axis=1)

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def transform(self, X):
        """

        Rectified convolution features [n, channels, window - kernel_size + 1].
        """
        self._check_fitted()
        return _classifier_forward(self.params_, X)[1][2]

    def loss_and_grads(self, X, y):
        self._check_fitted()
        return classifier_loss_and_grads(self.params_, X, y)

    def confusion(self, X, y):
        """

        Confusion matrix of the predictions on (X, y).

        :rtype: ConfusionMatrix
        """
        return ConfusionMatrix.from_predictions(y, self.predict(X), self.classes_.size)

    def plot_confusion(self, confusion, path=None):
        fig, ax = self._heatmap(confusion.counts, xlabel="Predicted step index", ylabel="True step index")
        ax.set_title("Accuracy {0:.3f}".format(confusion.accuracy))
        if path is None:
            return fig
        save_svg(fig, path)
        return None
