"""Workbench for resampling-algorithm convergence analysis.

Exact Shearer-region computation, Moser-Tardos simulation with resampling
tables, the witness-DAG calculus, intersection-aware convergence verdicts,
and lattice gap bounds.
"""

__version__ = "0.1.0"
