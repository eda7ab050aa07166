# -*- coding: utf-8 -*-

from typing import Any, Optional, Type, TypeVar
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Extra, Field, validator

from .constants import SCHEMA_VERSION
from .errors import ArtifactError, StructuralError


def as_array(value: Any, ndim: Optional[int] = None, name: str = 'array') -> np.ndarray:
    """Convert a value to a read-only float64 array

    Parameters
    ----------
    value : array-like
        Nested lists, tuples or an ndarray.
    ndim : int, optional
        Required number of dimensions. A scalar is promoted to 1-d when ``ndim == 1``.
    name : str
        Field name used in error messages.

    Raises
    ------
    StructuralError : The value has the wrong number of dimensions or non-finite entries.

    """

    arr = np.array(value, dtype=float)

    if ndim == 1 and arr.ndim == 0:
        arr = arr.reshape(1)
    if ndim is not None and arr.ndim != ndim:
        raise StructuralError(f"'{name}' must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"'{name}' has non-finite entries")

    arr.setflags(write=False)
    return arr


def _values_equal(left: Any, right: Any) -> bool:
    if isinstance(left, np.ndarray) or isinstance(right, np.ndarray):
        return np.array_equal(np.asarray(left), np.asarray(right))
    if isinstance(left, BaseModel) and isinstance(right, BaseModel):
        return left == right
    if isinstance(left, (list, tuple)) and isinstance(right, (list, tuple)):
        return len(left) == len(right) and all(_values_equal(a, b) for a, b in zip(left, right))
    return left == right


class ArrayModel(BaseModel):
    """Immutable pydantic model that may carry numpy arrays

    Arrays serialize to nested lists in ``.json()``; equality compares arrays elementwise.
    """

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        allow_population_by_field_name = True
        extra = Extra.forbid
        json_encoders = {
            np.ndarray: lambda a: a.tolist(),
            np.integer: int,
            np.floating: float,
        }

    def __eq__(self, other: Any) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        return all(_values_equal(getattr(self, name), getattr(other, name)) for name in self.__fields__)

    def __hash__(self) -> int:  # pragma: no cover
        return id(self)


class DocumentModel(ArrayModel):
    """Top-level artifact carrying a ``schema`` version tag
    """

    schema_version: int = Field(SCHEMA_VERSION, alias='schema')

    @validator('schema_version')
    def _check_schema(cls, value):
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {value}, expected {SCHEMA_VERSION}")
        return value


TDocument = TypeVar('TDocument', bound=DocumentModel)


def write_document(document: DocumentModel, path: Path):
    """Write a document as JSON
    """

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document.json(by_alias=True, indent=2))
    except OSError as err:
        raise ArtifactError(f"Cannot write '{path}': {err}") from err


def read_document(model_cls: Type[TDocument], path: Path) -> TDocument:
    """Read and validate a JSON document
    """

    try:
        return model_cls.parse_file(path)
    except (OSError, ValueError) as err:
        raise ArtifactError(f"Cannot read {model_cls.__name__} from '{path}'\n{err}") from err
