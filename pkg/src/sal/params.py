"""Named weight tensors and the ordered collection that holds them.

Everything downstream (network, optimizers, interventions, checkpoints)
iterates parameters in collection order, which is what makes seeded noise
draws reproducible.
"""
from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

from .errors import NonFiniteError


class Param:
    """One named tensor. Values are float64, C-contiguous and finite."""

    __slots__ = ("name", "values", "trainable")

    def __init__(self, name: str, values, trainable: bool = True):
        arr = np.ascontiguousarray(values, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"parameter {name!r} contains non-finite values")
        self.name = name
        self.values = arr
        self.trainable = bool(trainable)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def size(self) -> int:
        return self.values.size

    def copy(self) -> "Param":
        out = Param.__new__(Param)
        out.name = self.name
        out.values = self.values.copy()
        out.trainable = self.trainable
        return out

    def __repr__(self) -> str:
        flag = "" if self.trainable else ", frozen"
        return f"Param({self.name!r}, shape={self.shape}{flag})"


class ParameterSet:
    """Ordered, name-indexed collection of :class:`Param` entries."""

    def __init__(self, params: Iterable[Param]):
        self._params = list(params)
        names = [p.name for p in self._params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self._index = {name: i for i, name in enumerate(names)}

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[Param]:
        return iter(self._params)

    def __getitem__(self, key) -> Param:
        if isinstance(key, str):
            return self._params[self._index[key]]
        return self._params[key]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def names(self) -> list[str]:
        return [p.name for p in self._params]

    @property
    def size(self) -> int:
        return sum(p.size for p in self._params)

    def trainable(self) -> list[Param]:
        return [p for p in self._params if p.trainable]

    def copy(self) -> "ParameterSet":
        return ParameterSet(p.copy() for p in self._params)

    def to_vector(self, trainable_only: bool = True) -> np.ndarray:
        """Concatenate entries into one flat float64 vector (a copy)."""
        entries = self.trainable() if trainable_only else self._params
        if not entries:
            return np.empty(0, dtype=np.float64)
        return np.concatenate([p.values.ravel() for p in entries])

    def with_vector(self, vector: np.ndarray, trainable_only: bool = True) -> "ParameterSet":
        """New collection with the same structure but values taken from ``vector``."""
        vector = np.asarray(vector, dtype=np.float64).ravel()
        out = self.copy()
        offset = 0
        for p in out:
            if trainable_only and not p.trainable:
                continue
            chunk = vector[offset:offset + p.size]
            if chunk.size != p.size:
                raise ValueError("vector length does not match parameter count")
            p.values = chunk.reshape(p.shape).copy()
            offset += p.size
        if offset != vector.size:
            raise ValueError("vector length does not match parameter count")
        return out

    def same_structure(self, other: "ParameterSet") -> bool:
        if len(self) != len(other):
            return False
        return all(
            a.name == b.name and a.shape == b.shape and a.trainable == b.trainable
            for a, b in zip(self, other)
        )

    def equal_values(self, other: "ParameterSet") -> bool:
        """Bitwise equality of every entry (values are always finite)."""
        return self.same_structure(other) and all(
            np.array_equal(a.values, b.values) for a, b in zip(self, other)
        )

    def validate_finite(self, context: str = "") -> None:
        for p in self._params:
            if not np.all(np.isfinite(p.values)):
                where = f" after {context}" if context else ""
                raise NonFiniteError(f"parameter {p.name!r} became non-finite{where}")

    def __repr__(self) -> str:
        return f"ParameterSet({len(self)} entries, {self.size} values)"


def zip_entries(params: ParameterSet, grads: ParameterSet) -> Iterator[tuple[Param, Param]]:
    """Pair parameters with their gradients, checking names and shapes align."""
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameters but {len(grads)} gradient entries")
    for p, g in zip(params, grads):
        if p.name != g.name or p.shape != g.shape:
            raise ValueError(f"gradient entry {g.name!r}{g.shape} does not match {p.name!r}{p.shape}")
        yield p, g
