"""Boxes, region predicates and composite midpoint quadrature.

Regions are predicates on point arrays ``(k, d) -> bool (k,)``.  They are
used both for chart domains (indicator functions on parameter space) and
for the target-space sets ``A`` on which volumes and masses are measured.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi coordinatewise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, d: int) -> "Box":
        return cls(np.zeros(d), np.ones(d))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, P) -> np.ndarray:
        P = np.atleast_2d(P)
        return np.all((P >= self.lo) & (P <= self.hi), axis=1)

    def to_json(self):
        return [self.lo.tolist(), self.hi.tolist()]


class Region:
    def contains(self, P) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __and__(self, other):
        return Intersection((self, other))

    def __or__(self, other):
        return Union((self, other))

    def __invert__(self):
        return Complement(self)


class Everything(Region):
    def contains(self, P):
        return np.ones(len(np.atleast_2d(P)), dtype=bool)


@dataclass(frozen=True, eq=False)
class BoxRegion(Region):
    """Finite union of closed-open boxes ``[lo, hi)``.

    Half-open cells make unions of adjacent boxes and their complements
    partition space exactly, which keeps additivity checks free of
    double counting.
    """

    boxes: tuple

    def contains(self, P):
        P = np.atleast_2d(P)
        out = np.zeros(len(P), dtype=bool)
        for b in self.boxes:
            out |= np.all((P >= b.lo) & (P < b.hi), axis=1)
        return out


@dataclass(frozen=True, eq=False)
class Ball(Region):
    center: np.ndarray
    radius: float

    def contains(self, P):
        return np.linalg.norm(np.atleast_2d(P) - np.asarray(self.center), axis=1) <= self.radius


@dataclass(frozen=True, eq=False)
class Complement(Region):
    region: Region

    def contains(self, P):
        return ~self.region.contains(P)


@dataclass(frozen=True, eq=False)
class Intersection(Region):
    regions: tuple

    def contains(self, P):
        out = np.ones(len(np.atleast_2d(P)), dtype=bool)
        for r in self.regions:
            out &= r.contains(P)
        return out


@dataclass(frozen=True, eq=False)
class Union(Region):
    regions: tuple

    def contains(self, P):
        out = np.zeros(len(np.atleast_2d(P)), dtype=bool)
        for r in self.regions:
            out |= r.contains(P)
        return out


@dataclass(frozen=True, eq=False)
class Preimage(Region):
    """``{p : func(p) in region}`` -- a target set pulled back to a chart domain."""

    region: Region
    func: object

    def contains(self, P):
        return self.region.contains(self.func(np.atleast_2d(P)))


def boxes(*pairs) -> BoxRegion:
    return BoxRegion(tuple(Box(lo, hi) for lo, hi in pairs))


def midpoint_grid(box: Box, per_axis: int):
    """Cell centres and the common cell volume of a uniform tensor grid."""
    axes = [lo + (np.arange(per_axis) + 0.5) * (hi - lo) / per_axis for lo, hi in zip(box.lo, box.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.column_stack([m.ravel() for m in mesh])
    return P, box.volume / per_axis**box.dim


def cell_labels(box: Box, per_axis: int, blocks: int) -> np.ndarray:
    """Label each grid cell with the index of the coarse block containing it."""
    blocks = max(1, min(blocks, per_axis))
    idx = np.indices((per_axis,) * box.dim).reshape(box.dim, -1).T
    coarse = idx * blocks // per_axis
    return np.ravel_multi_index(coarse.T, (blocks,) * box.dim)


def default_resolution(dim: int) -> int:
    return {1: 1024, 2: 128, 3: 32}.get(dim, 12)


def richardson(fine: float, coarse: float, smooth: bool = True):
    """Extrapolated value and error estimate from grids ``N`` and ``N/2``.

    The midpoint rule is second order, so ``(4 I_N - I_{N/2}) / 3`` removes
    the leading term.  Discontinuous integrands (indicators) are only first
    order; there the fine value is kept and the difference reported.
    """
    if smooth:
        return (4 * fine - coarse) / 3, abs(fine - coarse) / 3
    return fine, abs(fine - coarse)
