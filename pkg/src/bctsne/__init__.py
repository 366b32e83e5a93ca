"""Batch-corrected t-SNE: embeddings constrained to be orthogonal to known
batch variables, plus a synthetic data generator and mixing metrics."""

from .design import BatchDesign, Projector, build_design, project, projected_step
from .errors import (
    BctsneError,
    CollinearityError,
    DomainError,
    OptimizerError,
    ValidationError,
)
from .linalg import SvdResult, lstsq, pairwise_sqdist, truncated_svd
from .metrics import (
    MetricsConfig,
    MetricsReport,
    evaluate,
    kbet_acceptance,
    lisi,
    pc_regression,
    silhouette,
)
from .reduce import ReducedData, pca_reduce, residualized_reduce
from .simulate import SimOutput, SimSpec, normalize_log1p_cpm, simulate
from .tsne import (
    AffinityTable,
    EmbeddingState,
    OptimizerConfig,
    TraceRecord,
    calibrate_bandwidths,
    embedding_affinities,
    input_affinities,
    kl_gradient,
    kl_loss,
    run_tsne,
    step,
)

__version__ = "0.1.0"
