from pydantic import BaseModel


class FrozenModel(BaseModel):
    """Immutable model base; instances are safe to share between threads."""

    model_config = {
        "frozen": True,
        "populate_by_name": True,
        "arbitrary_types_allowed": True,
        "ser_json_inf_nan": "constants",
    }


class MutableModel(BaseModel):
    model_config = {
        "validate_assignment": False,
        "arbitrary_types_allowed": True,
        "ser_json_inf_nan": "constants",
    }
