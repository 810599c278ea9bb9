"""Domain models for finite-dimensional ternary and binary algebras.

All algebraic data is held as float64 numpy arrays in frozen dataclasses. The
ternary structure tensor is indexed ``C[lam, alpha, beta, gamma]``: the
``lam``-coefficient of ``[s_alpha, s_beta, s_gamma]`` on a fixed basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ternalg.core.errors import DimensionMismatchError, InvalidInputError

FibreVector = NDArray[np.float64]

DEFAULT_EPS: float = 1e-9


def _finite_array(values: ArrayLike, name: str) -> NDArray[np.float64]:
    arr: NDArray[np.float64] = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


def as_vector(values: ArrayLike, dim: int, name: str = "vector") -> FibreVector:
    """Validate and convert a fibre vector of the given dimension.

    Raises
    ------
    DimensionMismatchError
        If the vector is not one-dimensional of length ``dim``.
    InvalidInputError
        If any component is not finite.
    """

    arr: NDArray[np.float64] = np.asarray(values, dtype=np.float64)
    if arr.shape != (dim,):
        raise DimensionMismatchError(f"{name} has shape {arr.shape}, expected ({dim},)")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite components")
    return arr


def basis_vector(dim: int, index: int) -> FibreVector:
    """Return the zero-based ``index``-th standard basis vector of R^dim."""

    e: FibreVector = np.zeros(dim, dtype=np.float64)
    e[index] = 1.0
    return e


@dataclass(frozen=True)
class Tolerance:
    """Absolute residual bound used by every algebraic predicate."""

    eps: float = DEFAULT_EPS

    def __post_init__(self) -> None:
        if not (self.eps >= 0.0):
            raise InvalidInputError("tolerance eps must be >= 0")


@dataclass(frozen=True)
class TernaryAlgebra:
    """A ternary algebra on R^dim given by its structure tensor.

    Notes
    -----
    - Para-associativity is not required at construction; predicates in
      ``services.tern_core`` test it.
    - ``C`` is made read-only so instances are safe to share across threads.
    """

    dim: int
    C: NDArray[np.float64]
    label: Optional[str] = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvalidInputError("algebra dimension must be >= 1")
        C: NDArray[np.float64] = _finite_array(self.C, "structure tensor")
        n: int = self.dim
        if C.shape != (n, n, n, n):
            raise DimensionMismatchError(f"structure tensor has shape {C.shape}, expected {(n, n, n, n)}")
        object.__setattr__(self, "C", C)


@dataclass(frozen=True)
class BinaryAlgebra:
    """A binary algebra: ``M[lam, alpha, beta]`` is the lam-coefficient of s_alpha * s_beta."""

    dim: int
    M: NDArray[np.float64]
    unit: Optional[FibreVector] = None
    label: Optional[str] = None

    def __post_init__(self) -> None:
        n: int = self.dim
        if n < 1:
            raise InvalidInputError("algebra dimension must be >= 1")
        M: NDArray[np.float64] = _finite_array(self.M, "binary structure tensor")
        if M.shape != (n, n, n):
            raise DimensionMismatchError(f"binary structure tensor has shape {M.shape}, expected {(n, n, n)}")
        object.__setattr__(self, "M", M)
        if self.unit is not None:
            object.__setattr__(self, "unit", _finite_array(as_vector(self.unit, n, "unit"), "unit"))


@dataclass(frozen=True)
class BilinearForm:
    """A bilinear form on R^dim. Symmetry is a tested property, not an invariant."""

    dim: int
    B: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise InvalidInputError("form dimension must be >= 1")
        B: NDArray[np.float64] = _finite_array(self.B, "bilinear form")
        if B.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"bilinear form has shape {B.shape}, expected {(self.dim, self.dim)}")
        object.__setattr__(self, "B", B)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.B, self.B.T))


@dataclass(frozen=True)
class HeapTable:
    """A ternary operation table on ``order`` symbols.

    Notes
    -----
    - Entries are 1-based, ``table[a][b][c] = d`` meaning ``[e_a, e_b, e_c] = e_d``;
      the array is stored with zero-based positions and 1-based values as on disk.
    """

    order: int
    table: NDArray[np.int64] = field(repr=False)

    def __post_init__(self) -> None:
        k: int = self.order
        if k < 1:
            raise InvalidInputError("heap order must be >= 1")
        table: NDArray[np.int64] = np.array(self.table, dtype=np.int64)
        if table.shape != (k, k, k):
            raise DimensionMismatchError(f"heap table has shape {table.shape}, expected {(k, k, k)}")
        if table.min() < 1 or table.max() > k:
            raise InvalidInputError(f"heap table entries must lie in 1..{k}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)


@dataclass(frozen=True)
class LinearMap:
    """A linear map R^cols -> R^rows given by its matrix."""

    entries: NDArray[np.float64]

    def __post_init__(self) -> None:
        entries: NDArray[np.float64] = _finite_array(self.entries, "linear map")
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise DimensionMismatchError(f"linear map must be a non-empty matrix, got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim))

    def __call__(self, v: ArrayLike) -> FibreVector:
        return self.entries @ as_vector(v, self.cols)

    def compose(self, other: "LinearMap") -> "LinearMap":
        """Return ``self o other``."""

        if other.rows != self.cols:
            raise DimensionMismatchError(f"cannot compose {self.rows}x{self.cols} with {other.rows}x{other.cols}")
        return LinearMap(self.entries @ other.entries)
