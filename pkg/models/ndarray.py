from typing import Any

import numpy as np
from pydantic import GetCoreSchemaHandler
from pydantic_core import core_schema


class FloatArray(np.ndarray):
    """Pydantic field type for read-only float64 numpy arrays.

    Accepts arrays, lists and tuples; serializes back to plain lists.
    """

    @classmethod
    def __get_pydantic_core_schema__(
        cls, _source_type: Any, _handler: GetCoreSchemaHandler
    ) -> core_schema.CoreSchema:
        return core_schema.no_info_plain_validator_function(
            cls.validate,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda a: a.tolist()
            ),
        )

    @classmethod
    def validate(cls, value) -> np.ndarray:
        try:
            array = np.array(value, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"not convertible to a float array: {exc}") from exc
        array.setflags(write=False)
        return array
