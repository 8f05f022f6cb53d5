from typing import Optional

from pydantic import model_validator

from .base import FrozenModel
from .ndarray import FloatArray


class SmallCaseSolution(FrozenModel):
    """Closed-form minimizer for a length-2 or length-3 problem.

    `x` and `gradient_at_min` are None when the infimum is not attained.
    `unique` is None when uniqueness is not established.
    """

    x: Optional[FloatArray] = None
    attained: bool = True
    unique: Optional[bool] = None
    boundary: bool = False
    gradient_at_min: Optional[FloatArray] = None
    divergence: Optional[float] = None
    note: str = ""

    @model_validator(mode="after")
    def check_consistency(self) -> "SmallCaseSolution":
        if self.attained and self.x is None:
            raise ValueError("an attained minimum needs x")
        if not self.attained and self.x is not None:
            raise ValueError("an unattained infimum has no minimizer")
        return self
