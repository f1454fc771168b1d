"""Configuration file for the Sphinx documentation builder."""
# For the full list of options see
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------
import qrlab


project = "qrlab"
copyright = "2026 qrlab developers"
author = "qrlab developers"

# The full version, including alpha/beta/rc tags
release = qrlab.__version__


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.napoleon",
    "sphinx.ext.doctest",
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
    "myst_parser",
]

templates_path = ["_templates"]
exclude_patterns = ["_build", "README.md"]

# Napoleon settings
napoleon_use_ivar = True
napoleon_use_admonition_for_references = True
# See https://github.com/sphinx-doc/sphinx/issues/9119
napoleon_custom_sections = [("Returns", "params_style")]

# -- Options for HTML output -------------------------------------------------

html_theme = "furo"
html_title = "qrlab Documentation"
html_copy_source = False
html_theme_options = {
    "description": "Exact and statistical checks on runs of quadratic residues.",
}
