from abc import ABCMeta

import numpy as np
import matplotlib.pyplot as plt

from .AntScore import normalize, reference_line
from .PlotMixin import PlotMixin, save_svg


class AntPlotMixin(PlotMixin, metaclass=ABCMeta):
    """

    Mixin Class to add plotting methods to AntScheduleSelector objects.

    """

    @staticmethod
    def curve_figure(curves, highlight=None):
        """

        Normalized non-stationarity curves against diffusion progress, with the linear reference l*.
        Thicker lines mark schedules with more steps.

        :param list curves: :class:`NonStationarityCurve` objects.
        :param highlight: Spec drawn in black on top of the others.
        :return: Figure and axes.
        """
        fig, ax = plt.subplots()
        widths = np.array([c.T for c in curves], dtype=float)
        widths = 0.5 + 2.5 * (widths - widths.min()) / max(np.ptp(widths), 1.0)
        for c, width in zip(curves, widths):
            normalized, _ = normalize(c)
            label = c.spec.label if c.spec is not None else None
            color = 'k' if highlight is not None and c.spec == highlight else None
            PlotMixin._lineplots(normalized, xaxis=100 * c.progress, ax=ax, lw=width, label=label, color=color)
        ax.plot([0, 100], reference_line(2), 'k--', lw=1, label='l*')
        ax.set_xlabel("Diffusion progress (%)")
        ax.set_ylabel("Normalized non-stationarity")
        if len(curves) <= 12:
            ax.legend(fontsize='small')
        return fig, ax

    def plot_curves(self, path=None, top=None):
        """

        Plot the curves of the fitted candidates.

        :param str path: SVG destination; the figure is returned open when None.
        :param int top: Only plot the best ``top`` candidates.
        :raise AttributeError: If the selector is not fitted.
        """
        try:
            if self._isfitted is False:
                raise AttributeError("Selector is not fitted")
            specs = [spec for spec, _ in self.ranking_]
            if top is not None:
                specs = specs[:top]
            fig, ax = self.curve_figure([self.curves_[spec] for spec in specs], highlight=self.best_spec_)
            ax.set_title("Non-stationarity curves ({0})".format(self.statistic))
            if path is None:
                return fig
            save_svg(fig, path)
            return None
        except AttributeError as atre:
            raise atre

    def plot_ranking(self, path=None, top=10):
        """

        Bar plot of the ANT scores of the best ``top`` candidates.
        """
        try:
            if self._isfitted is False:
                raise AttributeError("Selector is not fitted")
            best = self.ranking_[:top]
            fig, ax = self._barplots(np.array([score.score for _, score in best]),
                                     labels=[spec.label for spec, _ in best])
            ax.set_ylabel("ANT score ({0})".format(self.metric))
            fig.tight_layout()
            if path is None:
                return fig
            save_svg(fig, path)
            return None
        except AttributeError as atre:
            raise atre
