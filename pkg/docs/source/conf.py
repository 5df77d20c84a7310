"""Sphinx configuration for the aiida-wellsplit documentation."""

import os
import sys

DOCS_SOURCE = os.path.dirname(os.path.abspath(__file__))
PACKAGE_DIR = os.path.abspath(os.path.join(DOCS_SOURCE, "../../src/aiida_wellsplit"))
sys.path.insert(0, os.path.dirname(PACKAGE_DIR))

project = "aiida_wellsplit"
copyright = "2026, The aiida-wellsplit developers"
author = "The aiida-wellsplit developers"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
]
napoleon_numpy_docstring = True
napoleon_google_docstring = False
autodoc_member_order = "bysource"

templates_path = ["_templates"]
exclude_patterns = []
source_suffix = ".rst"
master_doc = "index"

html_theme = "piccolo_theme"
html_static_path = ["_static"]


def run_apidoc(_):
    """Regenerate the API reference stubs from the package source."""
    from sphinx.ext import apidoc

    apidoc.main(
        [
            "--force",
            "--module-first",
            "--separate",
            "-o",
            os.path.join(DOCS_SOURCE, "api"),
            PACKAGE_DIR,
        ]
    )


def setup(app):
    """Generate the API stubs before each build."""
    app.connect("builder-inited", run_apidoc)
