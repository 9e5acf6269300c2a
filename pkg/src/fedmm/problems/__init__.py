from .base import MMProblem, ModelParam
from .dict_learning import DictLearningProblem, dict_oracle, dict_t_map
from .gmm_em import GmmEMProblem
from .lasso import SolverConfig, batch_lasso, kkt_residual, lasso_code
from .poisson_em import PoissonEMProblem
from .prox import Regularizer, prox, soft_threshold
from .quadratic import QuadSurrogateProblem, least_squares_problem
from .toy import ToyScalarProblem, toy_dataset

__all__ = [
    "MMProblem",
    "ModelParam",
    "DictLearningProblem",
    "dict_oracle",
    "dict_t_map",
    "GmmEMProblem",
    "SolverConfig",
    "batch_lasso",
    "kkt_residual",
    "lasso_code",
    "PoissonEMProblem",
    "Regularizer",
    "prox",
    "soft_threshold",
    "QuadSurrogateProblem",
    "least_squares_problem",
    "ToyScalarProblem",
    "toy_dataset",
]
