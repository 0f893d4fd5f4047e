from abc import ABCMeta

import matplotlib as mpl
import matplotlib.pyplot as plt
import seaborn as sns

# Fixed salt and no date so that reruns write identical SVG bytes
_SVG_RC = {'svg.hashsalt': 'pyDiffSchedules', 'svg.fonttype': 'path'}


def save_svg(fig, path):
    """
    Write a figure as SVG and close it.

    :param matplotlib.figure.Figure fig: Figure to save.
    :param str path: Destination file.
    """
    with mpl.rc_context(_SVG_RC):
        fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


class PlotMixin(metaclass=ABCMeta):
    """

    Mixin Class containing general plotting methods.
    Underlying plotting mixin classes can re-use and override if needed.

    """

    @staticmethod
    def _lineplots(mean, error=None, xaxis=None, ax=None, **line_kwargs):
        if ax is None:
            fig, ax = plt.subplots()
        else:
            fig = ax.figure
        if xaxis is None:
            xaxis = range(mean.size)
        ax.plot(xaxis, mean, **line_kwargs)
        if error is not None:
            ax.fill_between(xaxis, mean - error, mean + error, alpha=0.2, color='red')
        return fig, ax

    @staticmethod
    def _barplots(mean, error=None, xaxis=None, labels=None):
        fig, ax = plt.subplots()
        if xaxis is None:
            xaxis = range(mean.size)

        if error is None:
            ax.bar(xaxis, height=mean)
        else:
            ax.bar(xaxis, height=mean, yerr=error)
        if labels is not None:
            ax.set_xticks(list(xaxis))
            ax.set_xticklabels(labels, rotation=90)
        return fig, ax

    @staticmethod
    def _heatmap(matrix, xlabel=None, ylabel=None):
        fig, ax = plt.subplots()
        sns.heatmap(matrix, ax=ax, cmap='Blues', square=True, cbar=True)
        if xlabel is not None:
            ax.set_xlabel(xlabel)
        if ylabel is not None:
            ax.set_ylabel(ylabel)
        return fig, ax
