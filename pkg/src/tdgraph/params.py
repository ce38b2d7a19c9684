"""Named parameter containers with a deterministic tensor order."""

from __future__ import annotations

import dataclasses

import numpy as np


class ParamSet:
    """Mixin for dataclasses whose fields are all float64 arrays."""

    def names(self) -> list[str]:
        return [f.name for f in dataclasses.fields(self)]

    def items(self):
        for name in self.names():
            yield name, getattr(self, name)

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(self.items())

    @classmethod
    def from_dict(cls, d: dict[str, np.ndarray]):
        return cls(**{f.name: np.array(d[f.name], dtype=np.float64) for f in dataclasses.fields(cls)})

    def zeros_like(self):
        return type(self)(**{k: np.zeros_like(v) for k, v in self.items()})

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.items()})

    def __add__(self, other):
        return type(self)(**{k: v + getattr(other, k) for k, v in self.items()})
