"""Exact counts, samplers and limit laws for random magical squares.

A magical square is an n x n matrix of nonnegative integers whose rows and
columns all sum to r; equivalently an r-regular bipartite multigraph on
2n vertices.  See the submodules:

- :mod:`magsquares.permutation`  permutations and cycle/component spectra
- :mod:`magsquares.series`       exact exponential-formula series
- :mod:`magsquares.enumeration`  transfer-matrix counting and brute force
- :mod:`magsquares.sampler`      weighted and rejection samplers for r = 2
- :mod:`magsquares.limits`       limit laws and their numerics
"""

__version__ = "0.1.0"

from .enumeration import (
    MagicalSquare,
    ResourceCapExceeded,
    count_table,
    enumerate_matrices,
    exact_statistic_pmf,
    spectrum_of,
    transfer_count_H,
)
from .permutation import ComponentSpectrum, CycleType, Permutation, make_rng
from .series import CountTable, beta_r2, f_r2, h_r2, h_r2_closed_form, series_exp, series_log
from .sampler import EstimateReport, importance_estimate, rejection_sample_uniform

__all__ = [
    "ComponentSpectrum",
    "CountTable",
    "CycleType",
    "EstimateReport",
    "MagicalSquare",
    "Permutation",
    "ResourceCapExceeded",
    "beta_r2",
    "count_table",
    "enumerate_matrices",
    "exact_statistic_pmf",
    "f_r2",
    "h_r2",
    "h_r2_closed_form",
    "importance_estimate",
    "make_rng",
    "rejection_sample_uniform",
    "series_exp",
    "series_log",
    "spectrum_of",
    "transfer_count_H",
]
