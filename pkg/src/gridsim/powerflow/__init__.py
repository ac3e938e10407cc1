from .jacobian import jacobian_rect, real_block_jacobian, wirtinger_derivatives
from .model import (
    NoSlackInIslandError,
    PfOptions,
    PowerFlowModel,
    ZeroVoltageError,
    model_build,
)
from .residuals import network_current, residual_current, residual_power
from .solver import (
    PfSolution,
    PowerFlowDidNotConverge,
    SingularJacobianError,
    apply_solution,
    flat_start,
    nr_solve,
    recover_flows,
    solve_network,
    total_balance,
)

__all__ = [
    "PfOptions",
    "PowerFlowModel",
    "model_build",
    "NoSlackInIslandError",
    "ZeroVoltageError",
    "residual_current",
    "residual_power",
    "network_current",
    "jacobian_rect",
    "wirtinger_derivatives",
    "real_block_jacobian",
    "nr_solve",
    "flat_start",
    "apply_solution",
    "solve_network",
    "recover_flows",
    "total_balance",
    "PfSolution",
    "SingularJacobianError",
    "PowerFlowDidNotConverge",
]
