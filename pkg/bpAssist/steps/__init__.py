# bpAssist/steps/__init__.py

"""
Subpackage containing the pipeline stages, in the order a request runs
through them:
dependence, diffing, heuristics, recommender, store, providers, repair,
explain, evaluation.
"""

__all__ = [
    "dependence",
    "diffing",
    "heuristics",
    "recommender",
    "store",
    "providers",
    "repair",
    "explain",
    "evaluation",
]
