"""Randomized facility location mechanisms with exact verification.

Modules: :mod:`facloc.metric` (finite metric spaces, costs),
:mod:`facloc.mechanisms`, :mod:`facloc.verification` (brute-force checkers),
:mod:`facloc.lpsolve` and :mod:`facloc.amd` (mechanism-design LP),
:mod:`facloc.plane` (Euclidean three-agent analysis), :mod:`facloc.cli`.
"""
__version__ = "0.1.0"
