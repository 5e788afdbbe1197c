"""Vectors over indexed direct sums of finite-dimensional real spaces.

A :class:`SpaceLayout` is an ordered table of ``(label, dim)`` pairs. A
:class:`BlockVec` stores one flat ``float64`` array together with its layout,
so block access is a slice into contiguous memory. :class:`StateX` packs the
four members ``(x, y, z, v*)`` of the solver state into one flat array laid
out as ``[x | y | z | v*]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "LayoutError",
    "SpaceLayout",
    "BlockVec",
    "StateX",
    "inner",
    "norm_sq",
    "lincomb",
]


class LayoutError(ValueError):
    """Raised when vectors over different layouts are combined."""


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered family of labelled real coordinate spaces.

    Parameters
    ----------
    blocks : sequence of (str, int)
        Block labels and dimensions, in storage order.
    """

    blocks: tuple[tuple[str, int], ...]
    _offsets: dict[str, slice] = field(init=False, repr=False, compare=False)

    def __init__(self, blocks: Iterable[tuple[str, int]]):
        blocks = tuple((str(lab), int(dim)) for lab, dim in blocks)
        seen = set()
        offsets = {}
        start = 0
        for lab, dim in blocks:
            if lab in seen:
                raise LayoutError(f"duplicate block label {lab!r}")
            if dim < 1:
                raise LayoutError(f"block {lab!r} has dimension {dim} < 1")
            seen.add(lab)
            offsets[lab] = slice(start, start + dim)
            start += dim
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "_offsets", offsets)

    @classmethod
    def from_dims(cls, dims: Mapping[str, int]) -> "SpaceLayout":
        return cls(dims.items())

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.blocks)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.blocks)

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    def dim(self, label: str) -> int:
        return self.blocks[self.index(label)][1]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no block labelled {label!r}") from None

    def slice(self, label: str) -> slice:
        try:
            return self._offsets[label]
        except KeyError:
            raise KeyError(f"no block labelled {label!r}") from None

    def __contains__(self, label) -> bool:
        return label in self._offsets

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.labels)


class BlockVec:
    """Element of a direct sum described by a :class:`SpaceLayout`.

    ``data`` is a flat float64 array of length ``layout.total_dim``. Block
    access returns views, so writing into a block writes into ``data``.
    """

    __slots__ = ("layout", "data")

    def __init__(self, layout: SpaceLayout, data=None):
        if data is None:
            data = np.zeros(layout.total_dim)
        else:
            data = np.asarray(data, dtype=float)
            if data.ndim != 1 or data.shape[0] != layout.total_dim:
                raise LayoutError(
                    f"data of shape {data.shape} does not match layout "
                    f"of total dimension {layout.total_dim}")
        self.layout = layout
        self.data = data

    @classmethod
    def zeros(cls, layout: SpaceLayout) -> "BlockVec":
        return cls(layout)

    @classmethod
    def from_blocks(cls, layout: SpaceLayout,
                    blocks: Mapping[str, Sequence[float]]) -> "BlockVec":
        """Assemble from a ``label -> vector`` mapping; missing blocks are 0."""
        unknown = set(blocks) - set(layout.labels)
        if unknown:
            raise LayoutError(f"unknown block labels {sorted(unknown)}")
        vec = cls(layout)
        for lab, val in blocks.items():
            val = np.asarray(val, dtype=float).reshape(-1)
            if val.shape[0] != layout.dim(lab):
                raise LayoutError(
                    f"block {lab!r} expects dimension {layout.dim(lab)}, "
                    f"got {val.shape[0]}")
            vec.data[layout.slice(lab)] = val
        return vec

    def block(self, label: str) -> np.ndarray:
        return self.data[self.layout.slice(label)]

    def __getitem__(self, label: str) -> np.ndarray:
        return self.block(label)

    def to_dict(self) -> dict[str, np.ndarray]:
        return {lab: self.block(lab).copy() for lab in self.layout.labels}

    def copy(self) -> "BlockVec":
        return BlockVec(self.layout, self.data.copy())

    def _check(self, other: "BlockVec"):
        if not isinstance(other, BlockVec) or other.layout != self.layout:
            raise LayoutError("block vectors live on different layouts")

    def __add__(self, other):
        self._check(other)
        return BlockVec(self.layout, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return BlockVec(self.layout, self.data - other.data)

    def __neg__(self):
        return BlockVec(self.layout, -self.data)

    def __mul__(self, scalar):
        return BlockVec(self.layout, float(scalar) * self.data)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, BlockVec):
            return NotImplemented
        return self.layout == other.layout and np.array_equal(self.data,
                                                              other.data)

    def __repr__(self):
        parts = ", ".join(f"{lab}={self.block(lab).tolist()}"
                          for lab in self.layout.labels)
        return f"BlockVec({parts})"


def inner(u: BlockVec, v: BlockVec) -> float:
    """Scalar product of two block vectors on the same layout."""
    if u.layout != v.layout:
        raise LayoutError("inner product of vectors on different layouts")
    return float(np.dot(u.data, v.data))


def norm_sq(u: BlockVec) -> float:
    return float(np.dot(u.data, u.data))


def lincomb(coeffs: Sequence[float], vecs: Sequence[BlockVec]) -> BlockVec:
    """Return ``sum_j coeffs[j] * vecs[j]``."""
    if len(vecs) == 0:
        raise ValueError("lincomb needs at least one vector")
    if len(coeffs) != len(vecs):
        raise ValueError(
            f"{len(coeffs)} coefficients for {len(vecs)} vectors")
    layout = vecs[0].layout
    out = np.zeros(layout.total_dim)
    for c, v in zip(coeffs, vecs):
        if v.layout != layout:
            raise LayoutError("lincomb of vectors on different layouts")
        out += float(c) * v.data
    return BlockVec(layout, out)


class StateX:
    """Point ``(x, y, z, v*)`` of the saddle space.

    ``x`` lives on the primal layout, the three others share the dual
    layout. Storage is one flat array ``[x | y | z | v*]``; the four members
    are :class:`BlockVec` views into it.
    """

    __slots__ = ("h_layout", "g_layout", "data")

    def __init__(self, h_layout: SpaceLayout, g_layout: SpaceLayout,
                 data=None):
        size = h_layout.total_dim + 3 * g_layout.total_dim
        if data is None:
            data = np.zeros(size)
        else:
            data = np.asarray(data, dtype=float)
            if data.shape != (size,):
                raise LayoutError(
                    f"state data of shape {data.shape}, expected ({size},)")
        self.h_layout = h_layout
        self.g_layout = g_layout
        self.data = data

    @classmethod
    def from_parts(cls, x: BlockVec, y: BlockVec, z: BlockVec,
                   vstar: BlockVec) -> "StateX":
        if not (y.layout == z.layout == vstar.layout):
            raise LayoutError("y, z and v* must share one layout")
        return cls(x.layout, y.layout,
                   np.concatenate([x.data, y.data, z.data, vstar.data]))

    @classmethod
    def zeros(cls, h_layout, g_layout) -> "StateX":
        return cls(h_layout, g_layout)

    @property
    def _nh(self):
        return self.h_layout.total_dim

    @property
    def _ng(self):
        return self.g_layout.total_dim

    def _part(self, j):
        nh, ng = self._nh, self._ng
        if j == 0:
            return self.data[:nh]
        start = nh + (j - 1) * ng
        return self.data[start:start + ng]

    @property
    def x(self) -> BlockVec:
        return BlockVec(self.h_layout, self._part(0))

    @property
    def y(self) -> BlockVec:
        return BlockVec(self.g_layout, self._part(1))

    @property
    def z(self) -> BlockVec:
        return BlockVec(self.g_layout, self._part(2))

    @property
    def vstar(self) -> BlockVec:
        return BlockVec(self.g_layout, self._part(3))

    def same_space(self, other: "StateX") -> bool:
        return (self.h_layout == other.h_layout
                and self.g_layout == other.g_layout)

    def copy(self) -> "StateX":
        return StateX(self.h_layout, self.g_layout, self.data.copy())

    def __add__(self, other):
        if not self.same_space(other):
            raise LayoutError("states live on different spaces")
        return StateX(self.h_layout, self.g_layout, self.data + other.data)

    def __sub__(self, other):
        if not self.same_space(other):
            raise LayoutError("states live on different spaces")
        return StateX(self.h_layout, self.g_layout, self.data - other.data)

    def __mul__(self, scalar):
        return StateX(self.h_layout, self.g_layout, float(scalar) * self.data)

    __rmul__ = __mul__

    def inner(self, other: "StateX") -> float:
        if not self.same_space(other):
            raise LayoutError("states live on different spaces")
        return float(np.dot(self.data, other.data))

    def norm_sq(self) -> float:
        return float(np.dot(self.data, self.data))

    def __repr__(self):
        return (f"StateX(x={self.x!r}, y={self.y!r}, z={self.z!r}, "
                f"vstar={self.vstar!r})")
