"""Constructions of ternary algebras and their binary reductions.

Covers bilinear-form algebras, heap tables (including cyclic-group heaps),
star-reduction to binary algebras, the canonical isomorphism between reductions
at two biunits, direct sums, triple tensor products, and the one-parameter
scaling isomorphisms between proportional algebras.
"""
from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ternalg.core.errors import DimensionMismatchError, NotScalingRelatedError, PreconditionError
from ternalg.domain.algebra import (
    BilinearForm,
    BinaryAlgebra,
    FibreVector,
    HeapTable,
    LinearMap,
    TernaryAlgebra,
    Tolerance,
    as_vector,
)
from ternalg.services.tern_core import DEFAULT_TOLERANCE, hom_residual, is_biunit

logger = logging.getLogger(__name__)

# canonical isomorphisms with |det| below this are reported as non-invertible
_INVERTIBLE_DET: float = 1e-12


def zero_algebra(n: int) -> TernaryAlgebra:
    """The ternary algebra on R^n whose product is identically zero."""

    return TernaryAlgebra(n, np.zeros((n, n, n, n)), f"zero({n})")


def bilinear_algebra(B: BilinearForm, label: Optional[str] = None) -> TernaryAlgebra:
    """Return the algebra ``[u, v, w] = B(u, v) w``, i.e. ``C^l_{abc} = B_{ab} delta^l_c``.

    Notes
    -----
    - Para-associative exactly when ``B`` is symmetric (or zero); antisymmetric
      forms are accepted so the failure can be demonstrated.
    """

    n: int = B.dim
    C: NDArray[np.float64] = np.einsum("ab,lc->labc", B.B, np.eye(n))
    return TernaryAlgebra(n, C, label)


def kernel_basis(B: BilinearForm, atol: float = 1e-12) -> NDArray[np.float64]:
    """Return an orthonormal basis (as rows) of ``ker(B) = {u : B(u, v) = 0 for all v}``."""

    _, s, vh = np.linalg.svd(B.B.T)
    rank: int = int(np.sum(s > atol))
    return vh[rank:].copy()


def heap_algebra(H: HeapTable, label: Optional[str] = None) -> TernaryAlgebra:
    """Linear extension of a heap table: ``C^l_{abc} = 1`` iff ``H[a][b][c] = l`` (1-based values)."""

    k: int = H.order
    C: NDArray[np.float64] = np.zeros((k, k, k, k))
    a, b, c = np.indices((k, k, k))
    C[H.table - 1, a, b, c] = 1.0
    return TernaryAlgebra(k, C, label)


def cyclic_heap_table(k: int) -> HeapTable:
    """Heap of the cyclic group of order ``k``: ``[a, b, c] = a - b + c`` (mod k, 1-based encoding)."""

    if k < 1:
        raise PreconditionError("cyclic heap order must be >= 1")
    a, b, c = np.indices((k, k, k))
    return HeapTable(k, (a - b + c) % k + 1)


def star_reduce(A: TernaryAlgebra, e: ArrayLike, tol: Tolerance = DEFAULT_TOLERANCE) -> BinaryAlgebra:
    """Binary reduction ``u *_e v = [u, e, v]``, i.e. ``M^l_{ab} = C^l_{agb} e^g``.

    Notes
    -----
    - Associative whenever ``A`` is para-associative; commutative when ``A`` is.
    - ``unit`` is set to ``e`` when ``e`` is a biunit of ``A``.
    """

    e_: FibreVector = as_vector(e, A.dim, "e")
    M: NDArray[np.float64] = np.einsum("lagb,g->lab", A.C, e_)
    unit: Optional[FibreVector] = e_ if is_biunit(A, e_, tol) else None
    return BinaryAlgebra(A.dim, M, unit, f"star({A.label})" if A.label else None)


def canonical_biunit_iso(
    A: TernaryAlgebra,
    e: ArrayLike,
    e2: ArrayLike,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> LinearMap:
    """Return ``psi(u) = [u, e, e2]``, an isomorphism from ``*_e`` to ``*_e2``.

    Parameters
    ----------
    A: TernaryAlgebra
        Para-associative algebra.
    e, e2: ArrayLike
        Biunits of ``A``.
    tol: Tolerance
        Bound used by the biunit test.

    Returns
    -------
    LinearMap
        Invertible ``psi`` with ``psi(u *_e v) = psi(u) *_e2 psi(v)``.

    Raises
    ------
    PreconditionError
        If either element is not a biunit, or ``psi`` comes out singular.
    """

    e_: FibreVector = as_vector(e, A.dim, "e")
    e2_: FibreVector = as_vector(e2, A.dim, "e2")
    if not is_biunit(A, e_, tol) or not is_biunit(A, e2_, tol):
        raise PreconditionError("canonical isomorphism needs two biunits")
    psi: NDArray[np.float64] = np.einsum("labc,b,c->la", A.C, e_, e2_)
    if abs(float(np.linalg.det(psi))) < _INVERTIBLE_DET:
        raise PreconditionError("canonical map is singular")
    return LinearMap(psi)


def direct_sum(A1: TernaryAlgebra, A2: TernaryAlgebra) -> TernaryAlgebra:
    """Component-wise product on R^(n1 + n2): ``[(u1,u2),(v1,v2),(w1,w2)] = ([u1,v1,w1], [u2,v2,w2])``."""

    n1, n2 = A1.dim, A2.dim
    n: int = n1 + n2
    C: NDArray[np.float64] = np.zeros((n, n, n, n))
    C[:n1, :n1, :n1, :n1] = A1.C
    C[n1:, n1:, n1:, n1:] = A2.C
    label: Optional[str] = f"{A1.label}+{A2.label}" if A1.label and A2.label else None
    return TernaryAlgebra(n, C, label)


def tensor_product(A1: TernaryAlgebra, A2: TernaryAlgebra, A3: TernaryAlgebra) -> TernaryAlgebra:
    """Triple tensor product with ``[u1 x u2 x u3, ...] = [u1,v1,w1] x [u2,v2,w2] x [u3,v3,w3]``.

    Notes
    -----
    - Multi-indices flatten lexicographically, ``(a1, a2, a3) -> (a1 * n2 + a2) * n3 + a3``
      (zero-based), matching ``numpy.kron`` of the factor vectors.
    """

    n: int = A1.dim * A2.dim * A3.dim
    C: NDArray[np.float64] = np.einsum("labc,mdef,nghi->lmnadgbehcfi", A1.C, A2.C, A3.C).reshape(n, n, n, n)
    label: Optional[str] = None
    if A1.label and A2.label and A3.label:
        label = f"{A1.label}*{A2.label}*{A3.label}"
    return TernaryAlgebra(n, C, label)


def scaling_iso_search(
    A1: TernaryAlgebra,
    A2: TernaryAlgebra,
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> Optional[float]:
    """Find ``lam > 0`` with ``phi = lam * I`` a homomorphism ``A1 -> A2``.

    Notes
    -----
    - Only proportional tensors are handled: if ``C1 = s * C2`` then
      ``lam * s * C2 = lam^3 * C2`` forces ``lam = sqrt(s)``.
    - Returns ``None`` when no positive scaling exists (``s <= 0``, or exactly one of
      the two algebras is zero). Two zero algebras give ``1.0``.

    Raises
    ------
    DimensionMismatchError
        If the dimensions differ.
    NotScalingRelatedError
        If both tensors are nonzero and not proportional.
    """

    if A1.dim != A2.dim:
        raise DimensionMismatchError(f"dimensions differ: {A1.dim} vs {A2.dim}")
    norm1: float = float(np.abs(A1.C).max())
    norm2: float = float(np.abs(A2.C).max())
    if norm1 == 0.0 and norm2 == 0.0:
        return 1.0
    if norm1 == 0.0 or norm2 == 0.0:
        logger.debug("scaling search: zero algebra is not isomorphic to a nonzero one")
        return None

    s: float = float(np.vdot(A1.C, A2.C) / np.vdot(A2.C, A2.C))
    if float(np.abs(A1.C - s * A2.C).max()) > tol.eps * max(1.0, norm1):
        raise NotScalingRelatedError("not scaling-related: structure tensors are not proportional")
    if s <= 0.0:
        return None

    lam: float = math.sqrt(s)
    residual: float = hom_residual(A1, A2, LinearMap(lam * np.eye(A1.dim)))
    if residual > tol.eps * max(1.0, norm1):
        return None
    return lam
