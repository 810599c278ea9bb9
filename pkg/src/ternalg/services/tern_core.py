"""Ternary algebra kernel: products, associativity residuals, biunits, homomorphisms.

Every function here is a pure function of immutable inputs. Contractions are
written with ``numpy.einsum`` on the structure tensor ``C[lam, a, b, c]``; the
leading ``...`` in the tensor-level helpers lets the field services batch them
over grid nodes.
"""
from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ternalg.core.errors import DimensionMismatchError, InvalidInputError
from ternalg.domain.algebra import (
    BinaryAlgebra,
    FibreVector,
    LinearMap,
    TernaryAlgebra,
    Tolerance,
    as_vector,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE: Tolerance = Tolerance()


# -- tensor-level helpers (batched over leading axes) ------------------------


def para_identity_terms(C: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Return the three contracted para-associativity terms indexed ``[..., lam, a, b, c, d, e]``.

    Notes
    -----
    - ``T1 = C^h_{abc} C^l_{hde}``, ``T2 = C^h_{dcb} C^l_{ahe}``, ``T3 = C^h_{cde} C^l_{abh}``;
      on the basis 5-tuple ``(s_a, s_b, s_c, s_d, s_e)`` they are the three sides of the law.
    """

    t1: NDArray[np.float64] = np.einsum("...habc,...lhde->...labcde", C, C)
    t2: NDArray[np.float64] = np.einsum("...hdcb,...lahe->...labcde", C, C)
    t3: NDArray[np.float64] = np.einsum("...hcde,...labh->...labcde", C, C)
    return t1, t2, t3


def a_identity_terms(C: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Same as ``para_identity_terms`` with the middle factor un-reversed: ``T2 = C^h_{bcd} C^l_{ahe}``."""

    t1: NDArray[np.float64] = np.einsum("...habc,...lhde->...labcde", C, C)
    t2: NDArray[np.float64] = np.einsum("...hbcd,...lahe->...labcde", C, C)
    t3: NDArray[np.float64] = np.einsum("...hcde,...labh->...labcde", C, C)
    return t1, t2, t3


def para_defect_tensor(C: NDArray[np.float64]) -> NDArray[np.float64]:
    """Max absolute para-associativity residual over all basis 5-tuples, per leading index."""

    t1, t2, t3 = para_identity_terms(C)
    axes: tuple[int, ...] = tuple(range(C.ndim - 4, t1.ndim))
    return np.maximum(np.abs(t1 - t2).max(axis=axes), np.abs(t2 - t3).max(axis=axes))


def _a_defect_tensor(C: NDArray[np.float64]) -> NDArray[np.float64]:
    t1, t2, t3 = a_identity_terms(C)
    axes: tuple[int, ...] = tuple(range(C.ndim - 4, t1.ndim))
    return np.maximum(np.abs(t1 - t2).max(axis=axes), np.abs(t2 - t3).max(axis=axes))


# -- products and residuals ---------------------------------------------------


def _vectors(A: TernaryAlgebra, xs: Sequence[ArrayLike]) -> list[FibreVector]:
    return [as_vector(x, A.dim, f"argument {i + 1}") for i, x in enumerate(xs)]


def ternary_product(A: TernaryAlgebra, u: ArrayLike, v: ArrayLike, w: ArrayLike) -> FibreVector:
    """Return ``[u, v, w]`` with components ``u^a v^b w^c C^l_{abc}``.

    Raises
    ------
    DimensionMismatchError
        If any argument does not have dimension ``A.dim``.
    """

    u_, v_, w_ = _vectors(A, (u, v, w))
    return np.einsum("labc,a,b,c->l", A.C, u_, v_, w_)


def para_residual(A: TernaryAlgebra, *xs: ArrayLike) -> tuple[FibreVector, FibreVector]:
    """Residuals of the para-associative law on ``x1..x5``.

    Returns
    -------
    tuple[FibreVector, FibreVector]
        ``R1 = [[x1,x2,x3],x4,x5] - [x1,[x4,x3,x2],x5]`` and
        ``R2 = [x1,[x4,x3,x2],x5] - [x1,x2,[x3,x4,x5]]``.
    """

    if len(xs) != 5:
        raise InvalidInputError(f"para_residual takes 5 vectors, got {len(xs)}")
    x1, x2, x3, x4, x5 = _vectors(A, xs)
    left: FibreVector = ternary_product(A, ternary_product(A, x1, x2, x3), x4, x5)
    middle: FibreVector = ternary_product(A, x1, ternary_product(A, x4, x3, x2), x5)
    right: FibreVector = ternary_product(A, x1, x2, ternary_product(A, x3, x4, x5))
    return left - middle, middle - right


def a_assoc_residual(A: TernaryAlgebra, *xs: ArrayLike) -> tuple[FibreVector, FibreVector]:
    """Residuals of the A-type law, where the middle factor is ``[x2, x3, x4]``."""

    if len(xs) != 5:
        raise InvalidInputError(f"a_assoc_residual takes 5 vectors, got {len(xs)}")
    x1, x2, x3, x4, x5 = _vectors(A, xs)
    left: FibreVector = ternary_product(A, ternary_product(A, x1, x2, x3), x4, x5)
    middle: FibreVector = ternary_product(A, x1, ternary_product(A, x2, x3, x4), x5)
    right: FibreVector = ternary_product(A, x1, x2, ternary_product(A, x3, x4, x5))
    return left - middle, middle - right


def para_defect(A: TernaryAlgebra) -> float:
    """Largest para-associativity residual over all basis 5-tuples (exact contraction)."""

    return float(para_defect_tensor(A.C))


def a_assoc_defect(A: TernaryAlgebra) -> float:
    return float(_a_defect_tensor(A.C))


def is_para_associative(A: TernaryAlgebra, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Whether ``C^h_{abc}C^l_{hde} = C^h_{dcb}C^l_{ahe} = C^h_{cde}C^l_{abh}`` holds within ``tol``.

    Notes
    -----
    - O(n^6) contraction; exact and exhaustive over basis 5-tuples.
    """

    defect: float = para_defect(A)
    logger.debug("para-associativity defect %.3e for %s", defect, A.label or f"dim-{A.dim} algebra")
    return defect <= tol.eps


def is_a_associative(A: TernaryAlgebra, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    return a_assoc_defect(A) <= tol.eps


def commutativity_defect(A: TernaryAlgebra) -> float:
    return float(np.abs(A.C - np.swapaxes(A.C, 1, 3)).max())


def is_commutative(A: TernaryAlgebra, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Whether ``[x, y, z] = [z, y, x]``, i.e. ``C^l_{abc} = C^l_{cba}`` within ``tol``."""

    return commutativity_defect(A) <= tol.eps


# -- biunits ------------------------------------------------------------------


def left_biunit_residual(A: TernaryAlgebra, e: ArrayLike) -> float:
    """Max-norm distance of ``x -> [e, e, x]`` from the identity."""

    e_: FibreVector = as_vector(e, A.dim, "e")
    left: NDArray[np.float64] = np.einsum("labc,a,b->lc", A.C, e_, e_)
    return float(np.abs(left - np.eye(A.dim)).max())


def right_biunit_residual(A: TernaryAlgebra, e: ArrayLike) -> float:
    """Max-norm distance of ``x -> [x, e, e]`` from the identity."""

    e_: FibreVector = as_vector(e, A.dim, "e")
    right: NDArray[np.float64] = np.einsum("labc,b,c->la", A.C, e_, e_)
    return float(np.abs(right - np.eye(A.dim)).max())


def is_biunit(A: TernaryAlgebra, e: ArrayLike, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """Whether ``[e, e, x] = [x, e, e] = x`` for every basis vector ``x`` within ``tol``."""

    return max(left_biunit_residual(A, e), right_biunit_residual(A, e)) <= tol.eps


def biunit_search(
    A: TernaryAlgebra,
    candidates: Sequence[ArrayLike],
    tol: Tolerance = DEFAULT_TOLERANCE,
) -> list[FibreVector]:
    """Return the candidates that are biunits, in candidate order.

    Parameters
    ----------
    A: TernaryAlgebra
        Algebra to search.
    candidates: Sequence[ArrayLike]
        Vectors to try; must not be empty.
    tol: Tolerance
        Bound on both biunit residuals.

    Notes
    -----
    - Enumerative only; no claim of completeness beyond the candidate set.
    - Both laws are quadratic in ``e``, so ``-e`` passes whenever ``e`` does.
    """

    if len(candidates) == 0:
        raise InvalidInputError("biunit_search needs at least one candidate")
    found: list[FibreVector] = [as_vector(c, A.dim, "candidate") for c in candidates if is_biunit(A, c, tol)]
    logger.debug("biunit search: %d of %d candidates pass", len(found), len(candidates))
    return found


# -- derived structures -------------------------------------------------------


def opposite(A: TernaryAlgebra) -> TernaryAlgebra:
    """Return the opposite algebra ``[u, v, w]^op = [w, v, u]``; an involution."""

    label: Optional[str] = f"op({A.label})" if A.label else None
    return TernaryAlgebra(A.dim, np.swapaxes(A.C, 1, 3).copy(), label)


def ternary_commutator(A: TernaryAlgebra, u: ArrayLike, v: ArrayLike, w: ArrayLike) -> FibreVector:
    """Alternating sum ``[u,v,w] - [v,u,w] + [w,u,v] - [u,w,v] + [v,w,u] - [w,v,u]``."""

    u_, v_, w_ = _vectors(A, (u, v, w))

    def p(x: FibreVector, y: FibreVector, z: FibreVector) -> FibreVector:
        return np.einsum("labc,a,b,c->l", A.C, x, y, z)

    return p(u_, v_, w_) - p(v_, u_, w_) + p(w_, u_, v_) - p(u_, w_, v_) + p(v_, w_, u_) - p(w_, v_, u_)


def hom_residual(A: TernaryAlgebra, B: TernaryAlgebra, phi: LinearMap) -> float:
    """Max over basis triples of ``|phi[s_a, s_b, s_c]_A - [phi s_a, phi s_b, phi s_c]_B|``.

    Parameters
    ----------
    A: TernaryAlgebra
        Source algebra.
    B: TernaryAlgebra
        Target algebra.
    phi: LinearMap
        Candidate homomorphism, a ``B.dim x A.dim`` matrix.

    Returns
    -------
    float
        Zero exactly when ``phi`` is a homomorphism.

    Raises
    ------
    DimensionMismatchError
        If ``phi`` is not a ``B.dim x A.dim`` matrix.
    """

    if (phi.rows, phi.cols) != (B.dim, A.dim):
        raise DimensionMismatchError(f"map is {phi.rows}x{phi.cols}, expected {B.dim}x{A.dim}")
    P: NDArray[np.float64] = phi.entries
    lhs: NDArray[np.float64] = np.einsum("ml,labc->mabc", P, A.C)
    rhs: NDArray[np.float64] = np.einsum("mijk,ia,jb,kc->mabc", B.C, P, P, P)
    return float(np.abs(lhs - rhs).max())


# -- binary algebras ----------------------------------------------------------


def binary_product(Bn: BinaryAlgebra, u: ArrayLike, v: ArrayLike) -> FibreVector:
    u_: FibreVector = as_vector(u, Bn.dim, "u")
    v_: FibreVector = as_vector(v, Bn.dim, "v")
    return np.einsum("lab,a,b->l", Bn.M, u_, v_)


def binary_assoc_residual(Bn: BinaryAlgebra, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Max over basis triples of ``|(s_a * s_b) * s_c - s_a * (s_b * s_c)|``.

    Notes
    -----
    - ``tol`` is accepted for signature symmetry with the predicates; the value
      returned is the raw residual and the caller compares it.
    """

    del tol
    left: NDArray[np.float64] = np.einsum("hab,lhc->labc", Bn.M, Bn.M)
    right: NDArray[np.float64] = np.einsum("hbc,lah->labc", Bn.M, Bn.M)
    return float(np.abs(left - right).max())


def is_binary_commutative(Bn: BinaryAlgebra, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    return float(np.abs(Bn.M - np.swapaxes(Bn.M, 1, 2)).max()) <= tol.eps


def binary_hom_residual(A: BinaryAlgebra, B: BinaryAlgebra, phi: LinearMap) -> float:
    """Max over basis pairs of ``|phi(s_a * s_b) - phi(s_a) *' phi(s_b)|``."""

    if (phi.rows, phi.cols) != (B.dim, A.dim):
        raise DimensionMismatchError(f"map is {phi.rows}x{phi.cols}, expected {B.dim}x{A.dim}")
    P: NDArray[np.float64] = phi.entries
    lhs: NDArray[np.float64] = np.einsum("ml,lab->mab", P, A.M)
    rhs: NDArray[np.float64] = np.einsum("mij,ia,jb->mab", B.M, P, P)
    return float(np.abs(lhs - rhs).max())
