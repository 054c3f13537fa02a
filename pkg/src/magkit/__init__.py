"""Magnitude and weighting vectors of finite metric spaces."""

from .errors import (DisconnectedGraphError, DuplicatePointError, InputError, MagkitError,
                     NotScatteredError, NumericalError, SingularMatrixError)
from .metric_core import (DistanceMatrix, Metric, PointCloud, SimilarityMatrix, Standardizer,
                          pairwise_distances, similarity_from_points, similarity_matrix)
from .weighting import (MagnitudeSeries, WeightingVector, boundary_profile, log_grid, magnitude,
                        magnitude_function, svm_objective, weighting_vector)

__version__ = "0.1.0"
