# -*- coding: utf-8 -*-
#
# suppauthors documentation build configuration file.

import sys
import os

# autodoc imports the package from the repository root
sys.path.insert(0, os.path.abspath(os.path.join('..', '..')))

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'suppauthors'
copyright = u'2026, suppauthors contributors'

from suppauthors import __version__
version = '.'.join(__version__.split('.')[:2])
release = __version__

exclude_patterns = []
pygments_style = 'sphinx'
autodoc_member_order = 'bysource'

# -- Options for HTML output ----------------------------------------------

html_theme = 'default'
html_static_path = []
htmlhelp_basename = 'suppauthorsdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'suppauthors', u'suppauthors Documentation', [u'suppauthors contributors'], 1)
]
