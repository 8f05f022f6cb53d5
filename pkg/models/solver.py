from enum import Enum

from pydantic import Field

from .base import FrozenModel
from .ndarray import FloatArray


class SolverMethod(str, Enum):
    EVEN = "even"
    ODD = "odd"
    RECURSIVE = "recursive"


class SolverInput(FrozenModel):
    """Coefficients r of x_j * sum_{i<=n-j} x_i = r_j and their derived sums.

    B_j = sum_{i<=j} r_i, E_j = sum_{i>=j} r_i with the extra entry E_{n+1} = 0
    (so `E` has length n+2), S2 = B_k - E_{k+1}, k = floor(n/2).
    """

    r: FloatArray
    B: FloatArray
    E: FloatArray
    S2: float = Field(..., ge=0)
    S: float = Field(..., ge=0)
    k: int = Field(..., ge=0)
    total: float = Field(..., ge=0)

    @property
    def n(self) -> int:
        return self.r.size - 1


class SolverSolution(FrozenModel):
    x: FloatArray
    residuals: FloatArray
    max_residual: float
    method: SolverMethod
    half_sum: float  # sum_{j<=k} x_j, equals S
