"""Frequent Directions sketches for streaming ridge regression.

The sketch keeps an ``ell x d`` matrix ``B`` with ``B^T B`` close to
``A^T A`` plus the exact vector ``A^T b``, and answers ridge queries in
``O(ell d)`` time.  See README.md for a tour.
"""
from .baselines import (SKETCHERS, CountSketchRidge, IncrementalSVD, RandomProjectionRidge,
                        TwoLevelFD, make_sketcher)
from .datagen import Dataset, SyntheticSpec, gen_synthetic, select_gamma, shingle_series
from .linalg import InvalidInput, NumericError, ThinSvd, read_fdrm, thin_svd, write_fdrm
from .ridge import (BoundReport, GramAccumulator, RidgeSolution, lemma1_bound, solve_exact,
                    solve_from_sketch, theorem_required_ell, theorem_required_gamma)
from .risk import RiskModel, RiskReport, risk_exact, risk_monte_carlo, risk_sketch
from .sketch import FrequentDirections, SketchStateError, dumps, loads

__version__ = "0.1.0"
