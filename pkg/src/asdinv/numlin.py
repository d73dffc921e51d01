"""Dense small-matrix numerical kernel.

Real eigendecomposition (left eigenvectors), Lyapunov solve via the
Kronecker-sum linear system, controllability rank, and single-input
Ackermann pole placement. Everything here targets the small systems
(n <= 9) this library works with; correctness is defined by explicit
residual contracts, not by the algorithm used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ComplexSpectrum,
    DimensionMismatch,
    MultiInput,
    NonSquare,
    SingularSystem,
    Uncontrollable,
    Unstable,
)

__all__ = [
    "EigenPair",
    "real_eig",
    "solve_lyapunov",
    "controllability_rank",
    "ackermann_gain",
    "is_hurwitz",
]


@dataclass(frozen=True)
class EigenPair:
    """A real eigenvalue of A and a unit-norm eigenvector of A^T.

    The vector satisfies ``A.T @ vector == value * vector`` up to the
    tolerance passed to :func:`real_eig`, with the sign fixed so the
    largest-magnitude entry is positive.
    """

    value: float
    vector: np.ndarray


def _require_finite(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return M


def _fix_sign(v: np.ndarray) -> np.ndarray:
    if v[np.argmax(np.abs(v))] < 0:
        return -v
    return v


def _diagonal_blocks(A: np.ndarray) -> list[np.ndarray]:
    """Index sets of the connected components of A's symmetric zero pattern.

    A block-diagonal matrix (exact zeros off the blocks) decouples into
    independent eigenproblems; this keeps repeated eigenvalues of
    decoupled channels attached to per-channel eigenvectors.
    """
    n = A.shape[0]
    adj = (A != 0.0) | (A.T != 0.0)
    np.fill_diagonal(adj, True)
    seen = np.zeros(n, dtype=bool)
    blocks = []
    for start in range(n):
        if seen[start]:
            continue
        stack = [start]
        comp = []
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in np.nonzero(adj[i])[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        blocks.append(np.array(sorted(comp)))
    return blocks


def real_eig(A: np.ndarray, tol: float = 1e-8) -> list[EigenPair]:
    """Eigenvalues of square A with unit eigenvectors of A^T.

    Returns pairs sorted by ascending eigenvalue. When A is exactly
    block diagonal the decomposition is computed per block so repeated
    eigenvalues of decoupled blocks get block-local eigenvectors.

    Raises ComplexSpectrum if any eigenvalue has |imag| >= tol.
    """
    A = _require_finite(A, "A")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]

    pairs: list[EigenPair] = []
    for idx in _diagonal_blocks(A):
        sub = A[np.ix_(idx, idx)]
        w, V = np.linalg.eig(sub.T)
        if np.any(np.abs(w.imag) >= tol):
            bad = w[np.argmax(np.abs(w.imag))]
            raise ComplexSpectrum(f"eigenvalue {bad} has imaginary part >= {tol}")
        w = w.real
        V = V.real
        scale = max(np.linalg.norm(A, 2), 1.0)
        for k in range(len(idx)):
            v = np.zeros(n)
            vk = V[:, k]
            vk = vk / np.linalg.norm(vk)
            v[idx] = vk
            v = _fix_sign(v)
            resid = np.linalg.norm(A.T @ v - w[k] * v)
            if resid > tol * scale:
                raise ComplexSpectrum(
                    f"eigenpair residual {resid:.3e} exceeds {tol:.1e}*||A||"
                )
            pairs.append(EigenPair(float(w[k]), v))
    pairs.sort(key=lambda p: p.value)
    return pairs


def is_hurwitz(A: np.ndarray) -> bool:
    A = _require_finite(A, "A")
    return bool(np.all(np.linalg.eigvals(A).real < 0.0))


def solve_lyapunov(A_cl: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Solve P @ A_cl + A_cl.T @ P = -M for symmetric positive-definite P.

    Direct vectorized solve of the Kronecker-sum system; fine at the
    sizes used here (n <= 9). M must be symmetric positive definite and
    A_cl Hurwitz.
    """
    A_cl = _require_finite(A_cl, "A_cl")
    M = _require_finite(M, "M")
    if A_cl.ndim != 2 or A_cl.shape[0] != A_cl.shape[1]:
        raise NonSquare(f"A_cl must be square, got {A_cl.shape}")
    if M.shape != A_cl.shape:
        raise DimensionMismatch(f"M shape {M.shape} != A_cl shape {A_cl.shape}")
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(np.linalg.norm(M), 1.0)):
        raise SingularSystem("M is not symmetric")
    if np.min(np.linalg.eigvalsh((M + M.T) / 2)) <= 0:
        raise SingularSystem("M is not positive definite")
    if not is_hurwitz(A_cl):
        raise Unstable("A_cl is not Hurwitz")

    n = A_cl.shape[0]
    eye = np.eye(n)
    # vec(P A) + vec(A^T P) = (A^T (x) I + I (x) A^T) vec(P), column-major vec
    L = np.kron(A_cl.T, eye) + np.kron(eye, A_cl.T)
    try:
        p = np.linalg.solve(L, -M.flatten(order="F"))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(f"Kronecker-sum solve failed: {exc}") from exc
    P = p.reshape((n, n), order="F")
    P = (P + P.T) / 2.0

    resid = np.linalg.norm(P @ A_cl + A_cl.T @ P + M)
    budget = 1e-8 * (np.linalg.norm(P) * np.linalg.norm(A_cl) + np.linalg.norm(M))
    if resid > budget:
        raise SingularSystem(
            f"Lyapunov residual {resid:.3e} exceeds budget {budget:.3e}"
        )
    return P


def controllability_rank(A: np.ndarray, B: np.ndarray, tol: float = 1e-10) -> int:
    """Numerical rank of [B, AB, ..., A^(n-1) B]."""
    A = _require_finite(A, "A")
    B = _require_finite(B, "B")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"A must be square, got {A.shape}")
    if B.ndim != 2 or B.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"B shape {B.shape} incompatible with A {A.shape}")
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    ctrb = np.hstack(blocks)
    # normalize columns before the SVD: A^k B grows like |lambda|^k and the
    # raw matrix can look rank-deficient at n = 9 even for controllable pairs
    norms = np.linalg.norm(ctrb, axis=0)
    nz = norms > 0
    ctrb = ctrb[:, nz] / norms[nz]
    if ctrb.shape[1] == 0:
        return 0
    sv = np.linalg.svd(ctrb, compute_uv=False)
    return int(np.sum(sv > tol * sv[0]))


def ackermann_gain(A0: np.ndarray, b: np.ndarray, poles) -> np.ndarray:
    """Single-input gain K (column) such that A0 + b K^T has the given poles.

    Note the sign convention: the closed loop is A0 + b K^T, so this is
    the negative of the textbook Ackermann gain for A0 - b k^T.
    """
    A0 = _require_finite(A0, "A0")
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b.reshape(-1, 1)
    if b.shape[1] != 1:
        raise MultiInput(
            f"b has {b.shape[1]} columns; supply K explicitly for multi-input plants"
        )
    poles = np.asarray(poles, dtype=float)
    n = A0.shape[0]
    if poles.size != n:
        raise DimensionMismatch(f"need {n} poles, got {poles.size}")
    if controllability_rank(A0, b) < n:
        raise Uncontrollable("(A0, b) is not controllable")

    blocks = [b]
    for _ in range(n - 1):
        blocks.append(A0 @ blocks[-1])
    ctrb = np.hstack(blocks)

    coeffs = np.poly(poles)  # monic desired characteristic polynomial
    pA = np.zeros_like(A0)
    for c in coeffs:
        pA = pA @ A0 + c * np.eye(n)

    en = np.zeros(n)
    en[-1] = 1.0
    k_row = en @ np.linalg.solve(ctrb, pA)
    K = -k_row.reshape(-1, 1)

    achieved = sorted(p.value for p in real_eig(A0 + b @ K.T, tol=1e-6))
    want = np.sort(poles)
    if np.max(np.abs(np.asarray(achieved) - want)) > 1e-8 * max(1.0, np.max(np.abs(want))):
        raise Uncontrollable("pole placement verification failed")
    return K
