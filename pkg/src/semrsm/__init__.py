"""Spatially permutation-invariant representational similarity.

Core objects: RepresentationBatch (N x C x S activations), KernelSpec,
MatcherSpec, SimilarityMatrix.  Core entry points: spatio_semantic_rsm,
semantic_rsm, cross_similarity, cka, evaluate_retrieval,
correlate_similarity_jsd, bench_matchers.
"""

from .assignment import (AffinityMatrix, AssignmentResult, MatcherSpec, affinity,
                         identity_assignment, quality_ratio, solve, solve_batch_optimal,
                         solve_greedy, solve_optimal, solve_topk_greedy)
from .analysis import (correlate_similarity_jsd, jsd, kl_divergence, pairwise_jsd,
                       pearson, softmax, spearman)
from .bench import bench_matchers, relative_similarity_distribution
from .cka import centering_matrix, cka, cka_layer_matrix, hsic
from .kernels import KernelSpec, gram_matrix, kernel_value, median_sigma
from .retrieval import (RetrievalResult, evaluate_retrieval, f1_instance_overlap,
                        iou_class_presence, retrieve_topk)
from .rsm import (DEFAULT_SEMANTIC_MATCHER, cross_similarity, semantic_rsm,
                  spatio_semantic_rsm)
from .tensor_io import (RepresentationBatch, SimilarityMatrix, center,
                        load_matrix, load_representations, save_matrix)

__version__ = "0.1.0"
