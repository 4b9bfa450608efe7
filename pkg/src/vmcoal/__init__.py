"""Vector multiplicative coalescent: exact cluster densities, gelation,
Lambert-Euler inversion, and multi-type Poisson branching extinction."""

from .errors import (
    AsymmetricMatrix,
    ModelError,
    NegativeEntry,
    NoConvergence,
    NonpositiveAlpha,
    ReducibleMatrix,
    SizeOverflow,
)
from .model import ModelParams, Phase, PhaseRegion, classify, gelation_time, spectral_radius, validate
from .spanning_tree import log_tree_factor, tree_enumerator
from .smoluchowski import ClusterDistribution, enumerate_sizes, mse_residual, total_mass, zeta
from .lambert_euler import InversionResult, invert, invert_1d, trace_post_gel
from .branching import extinction_fixed_point, extinction_series, mean_matrix, pgf, simulate_branching

__version__ = "0.1.0"
