"""Graph embedding subspace learning with per-sample data uncertainty.

LDA and MFA are expressed as intrinsic/penalty graph pairs. Giving each
training sample a diagonal Gaussian covariance adds degree-weighted
regularizers to both scatter matrices (the GEU-LDA / GEU-MFA variants).
"""

from .classify import KnnModel, accuracy, knn_predict
from .data import Dataset, load_csv
from .eigsolve import EigenSolution, SymmetricPencil, numeric_rank, solve_pencil
from .embedding import EmbeddingModel, fit, load_model, project, project_with_variance
from .graph import GraphPair, lda_graphs, mfa_graphs
from .uncertainty import (
    UncertaintyModel,
    estimate_supervised,
    estimate_unsupervised,
    from_explicit,
)

__all__ = [
    "Dataset", "EigenSolution", "EmbeddingModel", "GraphPair", "KnnModel", "SymmetricPencil",
    "UncertaintyModel", "accuracy", "estimate_supervised", "estimate_unsupervised", "fit",
    "from_explicit", "knn_predict", "lda_graphs", "load_csv", "load_model", "mfa_graphs",
    "numeric_rank", "project", "project_with_variance", "solve_pencil",
]
__version__ = "0.1.0"
