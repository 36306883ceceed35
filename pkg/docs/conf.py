# -*- coding: utf-8 -*-
#
# Sphinx configuration for the codesign documentation.
# Build with: sphinx-build -b html docs docs/_build/html

import os
import sys

sys.path.insert(0, os.path.abspath(".."))

from codesign._version import __version__  # noqa: E402

project = "codesign"
copyright = "2026, the codesign developers"
author = "the codesign developers"

# short X.Y, then the full dated release
version = ".".join(__version__.split(".")[:2])
release = __version__

# autodoc pulls the docstrings of the models; sphinx_click renders cli.rst
extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.doctest",
    "sphinx_click.ext",
]
autodoc_member_order = "bysource"

source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# -- HTML output ---------------------------------------------------------------

import guzzle_sphinx_theme  # noqa: E402

html_theme_path = guzzle_sphinx_theme.html_theme_path()
html_theme = "guzzle_sphinx_theme"
extensions.append("guzzle_sphinx_theme")
html_theme_options = {
    "project_nav_name": "codesign",
}
htmlhelp_basename = "codesign"

# -- Manual page -------------------------------------------------------------

man_pages = [
    (
        master_doc,
        "codesign",
        "co-design of bundle-composed DNNs and FPGA accelerators",
        [author],
        1,
    )
]
