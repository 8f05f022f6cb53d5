import numpy as np
from pydantic import field_validator

from .base import FrozenModel
from .ndarray import FloatArray


class LiftedTriangular(FrozenModel):
    """Lower-triangular nonnegative matrix of side n+1 (Y or W in the lifted problem)."""

    entries: FloatArray

    @field_validator("entries")
    @classmethod
    def check_entries(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 2 or value.shape[0] != value.shape[1] or value.shape[0] == 0:
            raise ValueError(f"entries must be a non-empty square matrix, got shape {value.shape}")
        if not np.all(np.isfinite(value)) or np.any(value < 0):
            raise ValueError("entries must be finite and nonnegative")
        if np.any(np.triu(value, k=1) != 0):
            raise ValueError("entries above the diagonal must be zero")
        return value

    @property
    def side(self) -> int:
        return self.entries.shape[0]

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def total(self) -> float:
        return float(self.entries.sum())


class PythagorasCheck(FrozenModel):
    """Residuals of a three-term divergence identity.

    `residual` is |I(A||C) - I(A||B) - I(B||C)|; `aux_residual` is the side
    identity checked together with it (objective match for Y, mass for W).
    """

    left: float
    through: float
    projection: float
    residual: float
    aux_residual: float
