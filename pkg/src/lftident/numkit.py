"""Dense linear-algebra kernels with explicit rank tolerances.

Every rank-sensitive decision in the package goes through :func:`rank_of`
with the shared tolerance policy ``tol = sigma_max * max(rows, cols) * 1e-10``
so that full-column-rank / full-row-rank claims are deterministic and
scale-invariant.  Empty matrices are first-class citizens throughout: a
matrix with zero columns is of full column rank, its right-null basis is
zero-dimensional, and products over an empty inner dimension are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput

__all__ = [
    "DEFAULT_RANK_RTOL",
    "set_rank_rtol",
    "active_rank_rtol",
    "RankDecision",
    "SvdFactors",
    "as_matrix",
    "svd_full",
    "rank_of",
    "is_fcr",
    "is_frr",
    "right_null_basis",
    "left_null_basis",
    "pinv",
    "solvable_axb",
    "gen_eig_psd_pencil",
    "gen_eig_psd_pencil_pairs",
    "kron",
    "vec",
    "unvec",
    "realify",
]

DEFAULT_RANK_RTOL = 1e-10
_active_rtol = DEFAULT_RANK_RTOL


def set_rank_rtol(rtol: float) -> None:
    """Process-wide override of the default relative rank tolerance.

    Individual calls can still pass ``tol``/``rtol`` explicitly; this knob
    exists so the CLI can pin one tolerance for a whole run and record it in
    the report.
    """
    global _active_rtol
    if not rtol > 0:
        raise InvalidInput(f"rank rtol must be positive, got {rtol}")
    _active_rtol = float(rtol)


def active_rank_rtol() -> float:
    return _active_rtol


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Coerce ``A`` to a finite 2-D float/complex ndarray.

    Raises InvalidInput on non-finite entries or dimension > 2.  Scalars and
    1-D arrays are promoted to row matrices.
    """
    M = np.asarray(A)
    if M.ndim > 2:
        raise InvalidInput(f"{name} must be at most 2-D, got shape {M.shape}")
    M = np.atleast_2d(M)
    if np.iscomplexobj(M):
        M = M.astype(np.complex128, copy=False)
    else:
        M = M.astype(np.float64, copy=False)
    if M.size and not np.all(np.isfinite(M)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return M


def _rank_tol(sigma: np.ndarray, shape: tuple[int, int], rtol: float, floor: float) -> float:
    if sigma.size == 0:
        return 0.0
    return max(float(sigma[0]), floor) * max(shape) * rtol


@dataclass(frozen=True)
class RankDecision:
    """Outcome of a tolerance-based rank test.

    ``rank`` counts singular values strictly above ``tol``; ``gap`` reports
    the singular values bracketing the cut so callers can judge how sharp
    the decision was.
    """

    rank: int
    tol: float
    singular_values: np.ndarray

    @property
    def gap(self) -> tuple[float, float]:
        s = self.singular_values
        above = float(s[self.rank - 1]) if self.rank > 0 else math.inf
        below = float(s[self.rank]) if self.rank < s.size else 0.0
        return above, below


@dataclass(frozen=True)
class SvdFactors:
    """Full SVD split at the rank tolerance.

    ``U1`` spans the range, ``U2`` its orthogonal complement; ``V1`` spans
    the co-range, ``V2`` the (right) null space.  ``sigma`` holds only the
    singular values above the tolerance, in descending order.
    """

    U1: np.ndarray
    U2: np.ndarray
    sigma: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    decision: RankDecision

    @property
    def rank(self) -> int:
        return self.decision.rank


def svd_full(A, tol: float | None = None, rtol: float | None = None,
             scale_floor: float = 0.0) -> SvdFactors:
    """Full SVD of ``A`` with range/null factors split at the rank tolerance.

    ``scale_floor`` anchors the relative tolerance when the matrix is known
    to live on a fixed natural scale (for instance products of orthonormal
    factors), so that an all-tiny matrix is treated as zero rather than
    ranked by its numerical dust.  Empty inputs produce empty factors with
    identity complements: for an ``m x 0`` input, ``U2`` is ``m x m`` and
    ``V2`` is ``0 x 0``.
    """
    M = as_matrix(A)
    m, n = M.shape
    if min(m, n) == 0:
        sigma = np.zeros(0)
        U = np.eye(m, dtype=M.dtype)
        Vh = np.eye(n, dtype=M.dtype)
    else:
        U, sigma, Vh = np.linalg.svd(M, full_matrices=True)
    if tol is None:
        cut = _rank_tol(sigma, (m, n), _active_rtol if rtol is None else rtol, scale_floor)
    else:
        cut = float(tol)
    r = int(np.sum(sigma > cut))
    decision = RankDecision(rank=r, tol=cut, singular_values=sigma)
    V = Vh.conj().T
    return SvdFactors(
        U1=U[:, :r],
        U2=U[:, r:],
        sigma=sigma[:r],
        V1=V[:, :r],
        V2=V[:, r:],
        decision=decision,
    )


def rank_of(A, tol: float | None = None, rtol: float | None = None,
            scale_floor: float = 0.0) -> RankDecision:
    """Rank of ``A`` under the shared tolerance policy."""
    M = as_matrix(A)
    if min(M.shape) == 0:
        return RankDecision(rank=0, tol=0.0, singular_values=np.zeros(0))
    sigma = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        cut = _rank_tol(sigma, M.shape, _active_rtol if rtol is None else rtol, scale_floor)
    else:
        cut = float(tol)
    return RankDecision(rank=int(np.sum(sigma > cut)), tol=cut, singular_values=sigma)


def is_fcr(A, tol: float | None = None, rtol: float | None = None,
           scale_floor: float = 0.0) -> bool:
    """True when ``A`` has full column rank (zero columns count as FCR)."""
    M = as_matrix(A)
    return rank_of(M, tol=tol, rtol=rtol, scale_floor=scale_floor).rank == M.shape[1]


def is_frr(A, tol: float | None = None, rtol: float | None = None) -> bool:
    """True when ``A`` has full row rank (zero rows count as FRR)."""
    M = as_matrix(A)
    return rank_of(M, tol=tol, rtol=rtol).rank == M.shape[0]


def right_null_basis(A, tol: float | None = None, rtol: float | None = None,
                     scale_floor: float = 0.0) -> np.ndarray:
    """Orthonormal columns spanning the right null space of ``A``.

    Full-column-rank inputs give a matrix with zero columns; an input with
    zero columns gives the 0 x 0 empty matrix; a zero matrix gives an
    identity-sized completion.
    """
    return svd_full(A, tol=tol, rtol=rtol, scale_floor=scale_floor).V2


def left_null_basis(A, tol: float | None = None, rtol: float | None = None) -> np.ndarray:
    """Orthonormal rows spanning the left null space of ``A``."""
    return svd_full(A, tol=tol, rtol=rtol).U2.conj().T


def pinv(A) -> np.ndarray:
    """Moore-Penrose inverse (empty-safe)."""
    M = as_matrix(A)
    if min(M.shape) == 0:
        return np.zeros((M.shape[1], M.shape[0]), dtype=M.dtype)
    return np.linalg.pinv(M)


def solvable_axb(A, B, C, tol: float | None = None):
    """Decide solvability of ``A X B = C`` and return a particular solution.

    Returns ``(True, A^+ C B^+)`` when both Moore-Penrose residual conditions
    hold within the tolerance, else ``(False, None)``.  The tolerance defaults
    to a scale-relative 1e-10 on the residual Frobenius norms.
    """
    Am, Bm, Cm = as_matrix(A, "A"), as_matrix(B, "B"), as_matrix(C, "C")
    if Cm.shape != (Am.shape[0], Bm.shape[1]):
        raise InvalidInput(
            f"C must be {Am.shape[0]} x {Bm.shape[1]}, got {Cm.shape}"
        )
    scale = max(np.linalg.norm(Cm), 1.0)
    cut = 1e-10 * scale if tol is None else float(tol)
    Ap, Bp = pinv(Am), pinv(Bm)
    left = Cm - Am @ (Ap @ Cm)
    right = Cm - (Cm @ Bp) @ Bm
    if np.linalg.norm(left) > cut or np.linalg.norm(right) > cut:
        return False, None
    return True, Ap @ Cm @ Bp


def _check_symmetric(M: np.ndarray, name: str) -> np.ndarray:
    if M.shape[0] != M.shape[1]:
        raise InvalidInput(f"{name} must be square, got {M.shape}")
    scale = max(np.linalg.norm(M), 1.0)
    if np.linalg.norm(M - M.T) > 1e-8 * scale:
        raise InvalidInput(f"{name} is not symmetric within tolerance")
    return 0.5 * (M + M.T)


def gen_eig_psd_pencil_pairs(S, M, rtol: float = 1e-12):
    """Generalized eigenpairs of the PSD pencil ``det(mu*M - S) = 0``.

    Directions in the joint null space of ``S`` and ``M`` are excluded (they
    carry no information).  Directions where ``M`` vanishes but ``S`` stays
    positive get ``mu = +inf`` (infinite-sloppiness sentinel).  Null-ness is
    decided against each matrix's own scale, never against the combined one:
    with spectra spreading over many decades a direction that is tiny next to
    the dominant matrix is still a perfectly good eigendirection.  Returns
    ``(values, vectors)`` with values descending and vectors as columns.
    """
    Sm = _check_symmetric(as_matrix(S, "S").real, "S")
    Mm = _check_symmetric(as_matrix(M, "M").real, "M")
    if Sm.shape != Mm.shape:
        raise InvalidInput("S and M must have identical shapes")
    n = Sm.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))

    lam, Q = scipy.linalg.eigh(Mm)
    lam = np.clip(lam, 0.0, None)
    mtol = lam.max() * n * rtol
    pos = lam > mtol
    Qp, Qn = Q[:, pos], Q[:, ~pos]
    lam_p = lam[pos]

    vals: list[float] = []
    vecs: list[np.ndarray] = []

    # Split the M-null block by the action of S: positive directions are
    # infinitely sloppy, S-null directions are jointly degenerate and dropped.
    Qn_pos = np.zeros((n, 0))
    S_bb_pos = np.zeros((0, 0))
    if Qn.shape[1]:
        S_nn = Qn.T @ Sm @ Qn
        w2, Y2 = scipy.linalg.eigh(0.5 * (S_nn + S_nn.T))
        stol = max(float(np.linalg.norm(Sm, 2)), 0.0) * n * rtol
        s_pos = w2 > stol
        Qn_pos = Qn @ Y2[:, s_pos]
        S_bb_pos = np.diag(w2[s_pos])
        for j in range(Qn_pos.shape[1]):
            vals.append(math.inf)
            vecs.append(Qn_pos[:, j])

    if lam_p.size:
        S_aa = Qp.T @ Sm @ Qp
        if S_bb_pos.shape[0]:
            S_ab = Qp.T @ Sm @ Qn_pos
            S_eff = S_aa - S_ab @ np.linalg.solve(S_bb_pos, S_ab.T)
        else:
            S_eff = S_aa
        S_eff = 0.5 * (S_eff + S_eff.T)
        mu, Y = scipy.linalg.eigh(S_eff, np.diag(lam_p))
        order = np.argsort(mu)[::-1]
        for idx in order:
            vals.append(max(float(mu[idx]), 0.0))
            vecs.append(Qp @ Y[:, idx])

    values = np.array(vals)
    vectors = np.column_stack(vecs) if vecs else np.zeros((n, 0))
    return values, vectors


def gen_eig_psd_pencil(S, M, rtol: float = 1e-12) -> np.ndarray:
    """Descending generalized eigenvalues of the PSD pencil (see pairs variant)."""
    values, _ = gen_eig_psd_pencil_pairs(S, M, rtol=rtol)
    return values


def kron(A, B) -> np.ndarray:
    """Kronecker product."""
    return np.kron(as_matrix(A), as_matrix(B))


def vec(A) -> np.ndarray:
    """Column-major stacking of the columns of ``A`` into a vector."""
    return np.asarray(A).reshape(-1, order="F")


def unvec(x, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(x).reshape(-1)
    if v.size != rows * cols:
        raise InvalidInput(f"cannot reshape length {v.size} into {rows} x {cols}")
    return v.reshape((rows, cols), order="F")


def realify(A) -> np.ndarray:
    """Real 2x2-block embedding [[Ar, -Aj], [Aj, Ar]] of a complex matrix.

    The embedding is full column rank over the reals exactly when ``A`` is
    full column rank over the complexes.
    """
    M = as_matrix(A)
    Ar, Aj = M.real, M.imag
    return np.block([[Ar, -Aj], [Aj, Ar]])
