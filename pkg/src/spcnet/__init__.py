"""Cross-receptive spectral graph filtering and experiment tooling."""

__version__ = "0.1.0"

from . import _kernels
from .data import (SbmConfig, SplitProtocol, generate_sbm, load_dataset,
                   make_split)
from .filters import (FilterSpec, apply_filter, apply_filter_transpose_grad,
                      filter_grad_k, spectral_norm, stability_constant)
from .graph import (Graph, SparseSymMatrix, build_normalized_adjacency,
                    build_normalized_laplacian, edge_homophily, spmm)
from .model import (ModelConfig, ModelParams, SplitSpec, evaluate, forward,
                    loss_and_grads, train)
from .pcpoly import (PcCoefficients, frequency_response, pc_coefficients,
                     pc_coefficients_grad_k)
from .robustness import (PerturbSpec, perturb, relative_output_distance,
                         robustness_sweep, stability_check)

KERNEL_BACKEND = _kernels.BACKEND
