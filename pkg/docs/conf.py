# -*- coding: utf-8 -*-
#
# pyDiffSchedules documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys
sys.path.append(os.path.abspath('..'))
from pyDiffSchedules import __version__

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.githubpages',
]

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = 'pyDiffSchedules'
copyright = '2026, pyDiffSchedules developers'
author = 'pyDiffSchedules developers'

version = __version__
release = __version__

language = 'en'

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

pygments_style = 'sphinx'

todo_include_todos = False

numfig = True


# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'

htmlhelp_basename = 'pyDiffSchedulesdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'pyDiffSchedules.tex', 'pyDiffSchedules Documentation',
     'pyDiffSchedules developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'pydiffschedules', 'pyDiffSchedules Documentation',
     [author], 1)
]
