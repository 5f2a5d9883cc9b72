"""Numpy array field types for pydantic models"""

from typing import Annotated, Any

import numpy as np
from pydantic_core import core_schema


class NdArrayField:
    """Pydantic field marker that stores a float64 numpy array of fixed rank.

    Accepts nested lists or arrays; values are copied and frozen so models
    holding them stay immutable. Serialized as nested lists.

    Usage:
        class Block(BaseModel):
            stages: Matrix
    """

    def __init__(self, ndim: int):
        self.ndim = ndim

    def validate(self, value: Any) -> np.ndarray:
        try:
            array = np.array(value, dtype=float)
        except (TypeError, ValueError):
            raise ValueError(f"Invalid numeric array: {value!r}")
        if array.ndim != self.ndim:
            raise ValueError(f"Expected an array of rank {self.ndim}, got shape {array.shape}")
        array.setflags(write=False)
        return array

    def __get_pydantic_core_schema__(self, _source_type: Any, _handler: Any) -> core_schema.CoreSchema:
        return core_schema.no_info_plain_validator_function(
            self.validate,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda x: np.asarray(x).tolist(),
            ),
        )

    def __get_pydantic_json_schema__(self, _core_schema, handler):
        schema = core_schema.float_schema()
        for _ in range(self.ndim):
            schema = core_schema.list_schema(schema)
        return handler(schema)


Vector = Annotated[np.ndarray, NdArrayField(ndim=1)]
Matrix = Annotated[np.ndarray, NdArrayField(ndim=2)]
