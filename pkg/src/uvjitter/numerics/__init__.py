from .linalg import EigenDecomp, det4, jacobi_eigen, solve4
from .quadrature import QuadResult, QuadratureSpec, integrate_adaptive
from .sampling import (
    block_seeds,
    make_rng,
    sample_gaussian,
    sample_poisson,
    sample_poisson_array,
)

__all__ = [
    "EigenDecomp",
    "QuadResult",
    "QuadratureSpec",
    "block_seeds",
    "det4",
    "integrate_adaptive",
    "jacobi_eigen",
    "make_rng",
    "sample_gaussian",
    "sample_poisson",
    "sample_poisson_array",
    "solve4",
]
