from .covariance import CovarianceOp, DenseCovariance, DiagonalCovariance
from .observation_set import ObservationSet
from .operators import IdentityOperator, IndexSubsetOperator, MatrixOperator, ObservationOperator

__all__ = [
    "CovarianceOp",
    "DenseCovariance",
    "DiagonalCovariance",
    "IdentityOperator",
    "IndexSubsetOperator",
    "MatrixOperator",
    "ObservationOperator",
    "ObservationSet",
]
