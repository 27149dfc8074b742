"""Lexicon-scale form/meaning mapping models for inflectional morphology.

The package learns linear and nonlinear mappings between letter n-gram
form vectors and distributional semantic vectors, produces inflected
forms by weaving supported n-grams into candidate strings, and relates
per-inflectional-class model performance to corpus-based productivity
measures.
"""

__version__ = "0.1.0"
