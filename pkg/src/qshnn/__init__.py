"""Quaternion-valued supervised Hopfield-structured networks."""
from .dynamics import NetworkConfig, Trajectory, find_equilibrium, integrate_rk4, rhs
from .learning import TrainConfig, TrainingReport, train
from .manifold import project_block, project_weight_matrix, quaternionicity_residual
from .quat import Quaternion, left_mult_matrix, quat_mul

__version__ = "0.1.0"
