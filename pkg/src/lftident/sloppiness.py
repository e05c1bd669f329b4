"""First-order sloppiness geometry around an identifiable parameter point.

The response deviation at each sampled frequency is parameterized through the
thin-SVD factors of G_yv and G_zu; collecting the admissibility, consistency
and realness constraints over all frequencies yields a pair of real block
matrices (Gamma, Omega).  When the frequency set certifies identifiability,
Gamma has full column rank and the admissible first-order deviations are the
null space S_H of (left-annihilator of Gamma) times Omega.  From S_H the
module derives

* the affine parameterization theta = theta0 + S_k xi of all parameters whose
  response-deviation energy stays below eps^2 (a q-dimensional ellipsoid),
* absolute/relative sloppiness metrics as generalized eigenvalues of the
  pencil (S_k^T S_k, M) with M the deviation-energy Gram matrix, and
* a per-frequency spectral-norm membership predicate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import identifiability as ident
from . import numkit, response
from .errors import ConstructionError, GammaRankDeficient, InvalidInput, RankDrop
from .model import DescriptorModel

__all__ = [
    "PointwiseFactors",
    "QPair",
    "SMatrices",
    "EllipsoidModel",
    "SloppinessReport",
    "pointwise_factors",
    "q_pair",
    "gamma_omega",
    "s_matrices",
    "frobenius_ellipsoid",
    "metrics",
    "deviation_sigmas",
    "spectral_membership",
]

EPS_CONVENTION = "energy<=eps^2"


@dataclass(frozen=True)
class PointwiseFactors:
    """Thin-SVD data of G_yv and G_zu at one frequency plus the loop-corrected factors.

    ``Phi_l`` maps deviation coordinates into the parameter block from the
    left, ``Phi_r`` from the right:

        Phi_l = (I - P(theta0) G_zv) V_yv1 Sigma_yv^-1      (m_v x r_yv)
        Phi_r = Sigma_zu^-1 U_zu^H (I - G_zv P(theta0))     (m_z x m_z)
    """

    omega: float
    U_yv1: np.ndarray
    sigma_yv: np.ndarray
    V_yv1: np.ndarray
    U_zu: np.ndarray
    sigma_zu: np.ndarray
    V_zu1: np.ndarray
    Phi_l: np.ndarray
    Phi_r: np.ndarray

    @property
    def r_yv(self) -> int:
        return int(self.sigma_yv.size)

    @property
    def r_zu(self) -> int:
        return int(self.sigma_zu.size)


def pointwise_factors(model: DescriptorModel, theta0, omega: float) -> PointwiseFactors:
    """Factor G_yv and G_zu at one frequency; requires G_zu full row rank there."""
    t0 = model.check_theta(theta0)
    g = response.g_blocks(model, omega)
    m_z, m_v = model.dims.m_z, model.dims.m_v

    # Rank decisions here are anchored at the overall response scale at this
    # frequency: a block vanishing at an isolated omega must read as a rank
    # drop, not be ranked by its numerical dust.
    scale = max(
        (float(np.linalg.norm(B, 2)) for B in (g.G_yu, g.G_yv, g.G_zu, g.G_zv) if B.size),
        default=1.0,
    )
    scale = max(scale, 1e-300)
    zu = numkit.svd_full(g.G_zu, scale_floor=scale)
    if zu.rank < m_z:
        raise RankDrop(
            f"G_zu drops to rank {zu.rank} < m_z={m_z} at omega={omega}; pick another frequency"
        )
    yv = numkit.svd_full(g.G_yv, scale_floor=scale)

    P0 = model.p_of(t0)
    loop_l = np.eye(m_v) - P0 @ g.G_zv
    loop_r = np.eye(m_z) - g.G_zv @ P0
    Phi_l = loop_l @ yv.V1 @ np.diag(1.0 / yv.sigma) if yv.rank else np.zeros((m_v, 0))
    Phi_r = np.diag(1.0 / zu.sigma) @ zu.U1.conj().T @ loop_r
    return PointwiseFactors(
        omega=float(omega),
        U_yv1=yv.U1,
        sigma_yv=yv.sigma,
        V_yv1=yv.V1,
        U_zu=zu.U1,
        sigma_zu=zu.sigma,
        V_zu1=zu.V1,
        Phi_l=Phi_l,
        Phi_r=Phi_r,
    )


def _th_permutation(r_yv: int, r_zu: int) -> np.ndarray:
    """Row-permutation matrix T with T xi = [vec(D_r); vec(D_j)] for
    xi = vec(col{D_r; D_j})."""
    n = 2 * r_yv * r_zu
    perm = np.empty(n, dtype=int)
    pos = 0
    for c in range(r_zu):  # real rows of column c
        perm[pos:pos + r_yv] = np.arange(2 * c * r_yv, (2 * c + 1) * r_yv)
        pos += r_yv
    for c in range(r_zu):  # imaginary rows of column c
        perm[pos:pos + r_yv] = np.arange((2 * c + 1) * r_yv, (2 * c + 2) * r_yv)
        pos += r_yv
    return np.eye(n)[perm, :]


@dataclass(frozen=True)
class QPair:
    """Real matrices acting on interleaved deviation coordinates.

    For any complex D (r_yv x r_zu) with xi = vec(col{Re D; Im D}):
    ``Q_r @ xi = vec(Re(Phi_l D Phi_r))`` and ``Q_j @ xi`` its imaginary part.
    """

    omega: float
    Q_r: np.ndarray
    Q_j: np.ndarray
    T_H: np.ndarray


def q_pair(factors: PointwiseFactors, check_probes: int = 20, seed: int = 1) -> QPair:
    """Assemble the Q pair from the pointwise factors; self-checks the action."""
    L, R = factors.Phi_l, factors.Phi_r
    Lr, Lj = L.real, L.imag
    Rr, Rj = R.real, R.imag
    r_yv, r_zu = factors.r_yv, factors.r_zu
    T = _th_permutation(r_yv, r_zu)
    Q_r = np.hstack([
        np.kron(Rr.T, Lr) - np.kron(Rj.T, Lj),
        -np.kron(Rj.T, Lr) - np.kron(Rr.T, Lj),
    ]) @ T
    Q_j = np.hstack([
        np.kron(Rj.T, Lr) + np.kron(Rr.T, Lj),
        np.kron(Rr.T, Lr) - np.kron(Rj.T, Lj),
    ]) @ T

    rng = np.random.default_rng(seed)
    scale = max(np.linalg.norm(L), 1.0) * max(np.linalg.norm(R), 1.0)
    probes = check_probes if r_yv * r_zu else 0
    for _ in range(probes):
        D = rng.standard_normal((r_yv, r_zu)) + 1j * rng.standard_normal((r_yv, r_zu))
        xi = numkit.vec(np.vstack([D.real, D.imag]))
        prod = L @ D @ R
        err_r = np.max(np.abs(Q_r @ xi - numkit.vec(prod.real)))
        err_j = np.max(np.abs(Q_j @ xi - numkit.vec(prod.imag)))
        if max(err_r, err_j) > 1e-10 * scale * max(1.0, float(np.max(np.abs(D)))):
            raise ConstructionError(
                f"Q action self-check failed at omega={factors.omega}: "
                f"residual {max(err_r, err_j):.3e}"
            )
    return QPair(omega=factors.omega, Q_r=Q_r, Q_j=Q_j, T_H=T)


def _block_rows(psi_dec, pis, qpairs, m_z: int):
    """Per-frequency column blocks of (Gamma | Omega) in row-block order."""
    N = len(pis)
    q = psi_dec.rank
    U1t, U2t = psi_dec.U1.T, psi_dec.U2.T
    g_cols = [2 * p.kernel_dim * m_z for p in pis]
    o_cols = [qp.Q_r.shape[1] for qp in qpairs]
    I_mz = np.eye(m_z)

    g_r = [U1t @ np.kron(I_mz, p.Pi_bar_r) for p in pis]
    o_r = [U1t @ qp.Q_r for qp in qpairs]
    g_s = [U2t @ np.kron(I_mz, p.Pi_bar_r) for p in pis]
    o_s = [U2t @ qp.Q_r for qp in qpairs]
    g_j = [np.kron(I_mz, p.Pi_bar_j) for p in pis]
    o_j = [qp.Q_j for qp in qpairs]

    def assemble(first, diag_rows, widths):
        """Rows: (N-1) consistency blocks, then N solvability, then N realness."""
        rows = []
        for i in range(1, N):
            row = [np.zeros((first[0].shape[0], wdt)) for wdt in widths]
            row[0] = first[0]
            row[i] = -first[i]
            rows.append(np.hstack(row))
        for kind in diag_rows:
            for i in range(N):
                row = [np.zeros((kind[i].shape[0], wdt)) for wdt in widths]
                row[i] = kind[i]
                rows.append(np.hstack(row))
        total = sum(widths)
        return np.vstack(rows) if rows else np.zeros((0, total))

    Gamma = assemble(g_r, (g_s, g_j), g_cols)
    Omega = assemble(o_r, (o_s, o_j), o_cols)
    return Gamma, Omega


def _context(model, theta0, freqs, pis=None, factors=None, psi_dec=None):
    t0 = model.check_theta(theta0)
    w = [float(x) for x in freqs]
    if not w:
        raise InvalidInput("at least one frequency is required")
    if len(set(w)) != len(w):
        raise InvalidInput(f"frequencies must be distinct, got {w}")
    psi_dec = psi_dec if psi_dec is not None else ident.psi(model)
    if not psi_dec.is_fcr:
        raise GammaRankDeficient(
            "Psi is rank deficient: no frequency set certifies identifiability"
        )
    pis = list(pis) if pis is not None else [ident.pi_at(model, t0, wi) for wi in w]
    factors = (
        list(factors) if factors is not None
        else [pointwise_factors(model, t0, wi) for wi in w]
    )
    if len(pis) != len(w) or len(factors) != len(w):
        raise InvalidInput("pis/factors must match freqs")
    r_yv = {f.r_yv for f in factors}
    c_dim = {p.kernel_dim for p in pis}
    if len(r_yv) > 1 or len(c_dim) > 1:
        raise RankDrop(
            f"G_yv rank varies across the chosen frequencies (r_yv={sorted(r_yv)}, "
            f"kernel={sorted(c_dim)}); pick frequencies at the normal rank"
        )
    qpairs = [q_pair(f) for f in factors]
    return t0, w, psi_dec, pis, factors, qpairs


def gamma_omega(model: DescriptorModel, theta0, freqs, pis=None, factors=None,
                psi_dec=None) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the paired constraint stacks (Gamma, Omega) over the frequencies."""
    _, _, psi_dec, pis, factors, qpairs = _context(
        model, theta0, freqs, pis, factors, psi_dec
    )
    return _block_rows(psi_dec, pis, qpairs, model.dims.m_z)


@dataclass(frozen=True)
class SMatrices:
    """First-order deviation geometry over a certifying frequency set.

    ``S_H`` spans the admissible deviation coordinates, ``S_A`` the induced
    kernel coordinates (Gamma @ S_A = Omega @ S_H), ``S_k[k]`` the affine
    parameter maps (one per frequency), ``S_tilde[k]`` the complex deviation
    reconstruction at frequency k, and ``M`` the deviation-energy Gram matrix
    (equal to S_H^T S_H).
    """

    theta0: np.ndarray
    freqs: tuple[float, ...]
    Gamma: np.ndarray
    Omega: np.ndarray
    S_H: np.ndarray
    S_A: np.ndarray
    S_k: tuple[np.ndarray, ...]
    S_H_blocks: tuple[np.ndarray, ...]
    S_tilde: tuple[np.ndarray, ...]
    M: np.ndarray
    factors: tuple[PointwiseFactors, ...]
    psi_dec: ident.PsiDecomposition

    @property
    def n_s(self) -> int:
        return self.S_H.shape[1]

    def complex_block(self, k: int) -> np.ndarray:
        """Stack (S_H,k(2c-1) + j S_H,k(2c)) over the r_zu column groups:
        maps xi to vec of the complex deviation coordinates at frequency k."""
        f = self.factors[k]
        return _complex_block(self.S_H_blocks[k], f.r_yv, f.r_zu)


def _complex_block(block: np.ndarray, r_yv: int, r_zu: int) -> np.ndarray:
    rows = [
        block[2 * c * r_yv:(2 * c + 1) * r_yv, :]
        + 1j * block[(2 * c + 1) * r_yv:(2 * c + 2) * r_yv, :]
        for c in range(r_zu)
    ]
    return np.vstack(rows) if rows else np.zeros((0, block.shape[1]), dtype=complex)


def s_matrices(model: DescriptorModel, theta0, freqs, pis=None, factors=None,
               psi_dec=None) -> SMatrices:
    """Build the S matrices; refuses when Gamma is not full column rank.

    The parameter map at frequency k is

        S_k = V_Psi Sigma_Psi^-1 U_Psi1^T (Q_r(w_k) S_H,k - (I kron Pi_bar_r(w_k)) S_A,k)

    the minus sign following from Gamma a + Omega xi = 0 with S_A defined as
    Gamma^+ Omega S_H.
    """
    t0, w, psi_dec, pis, factors, qpairs = _context(
        model, theta0, freqs, pis, factors, psi_dec
    )
    m_z = model.dims.m_z
    N = len(w)
    Gamma, Omega = _block_rows(psi_dec, pis, qpairs, m_z)

    if not numkit.is_fcr(Gamma):
        raise GammaRankDeficient(
            "Gamma is rank deficient: these frequencies do not certify "
            "identifiability at theta0; run the frequency search first"
        )
    Gl = numkit.left_null_basis(Gamma).real
    S_H = numkit.right_null_basis(Gl @ Omega).real
    S_A = numkit.pinv(Gamma) @ Omega @ S_H

    n_s = S_H.shape[1]
    o_block = 2 * factors[0].r_yv * factors[0].r_zu
    g_block = 2 * pis[0].kernel_dim * m_z
    S_H_blocks = tuple(S_H[k * o_block:(k + 1) * o_block, :] for k in range(N))
    S_A_blocks = tuple(S_A[k * g_block:(k + 1) * g_block, :] for k in range(N))

    V1 = psi_dec.factors.V1.real
    sig = psi_dec.factors.sigma
    U1t = psi_dec.U1.T
    S_k = []
    for k in range(N):
        core = qpairs[k].Q_r @ S_H_blocks[k] - np.kron(np.eye(m_z), pis[k].Pi_bar_r) @ S_A_blocks[k]
        S_k.append(V1 @ (np.diag(1.0 / sig) @ (U1t @ core)))

    S_tilde = []
    M = np.zeros((n_s, n_s))
    for k in range(N):
        X = _complex_block(S_H_blocks[k], factors[k].r_yv, factors[k].r_zu)
        St = np.kron(factors[k].V_zu1, factors[k].U_yv1) @ X
        S_tilde.append(St)
        M += St.real.T @ St.real + St.imag.T @ St.imag
    M = 0.5 * (M + M.T)

    gram = S_H.T @ S_H
    if np.linalg.norm(M - gram) > 1e-8 * max(np.linalg.norm(gram), 1.0):
        raise ConstructionError(
            "energy Gram matrix disagrees with S_H^T S_H; factor bookkeeping is off"
        )
    return SMatrices(
        theta0=t0,
        freqs=tuple(w),
        Gamma=Gamma,
        Omega=Omega,
        S_H=S_H,
        S_A=S_A,
        S_k=tuple(S_k),
        S_H_blocks=S_H_blocks,
        S_tilde=tuple(S_tilde),
        M=M,
        factors=tuple(factors),
        psi_dec=psi_dec,
    )


@dataclass(frozen=True)
class EllipsoidModel:
    """Quadratic-form description of the small-deviation parameter set.

    The set is ``{theta0 + S_k @ xi : xi^T M xi <= eps^2}``; the energy
    convention is quadratic (sum of squared Frobenius deviations bounded by
    eps^2) so the sloppiness metrics take their closed forms verbatim.
    """

    theta0: np.ndarray
    S_k: np.ndarray
    M: np.ndarray
    eps: float
    convention: str = EPS_CONVENTION

    def quad(self, xi) -> float:
        x = np.asarray(xi, dtype=float).reshape(-1)
        return float(x @ self.M @ x)

    def contains(self, xi) -> bool:
        return self.quad(xi) <= self.eps ** 2 * (1.0 + 1e-12)

    def theta_of(self, xi) -> np.ndarray:
        return self.theta0 + self.S_k @ np.asarray(xi, dtype=float).reshape(-1)

    def boundary_point(self, direction) -> np.ndarray:
        """Scale ``direction`` onto the boundary xi^T M xi = eps^2."""
        u = np.asarray(direction, dtype=float).reshape(-1)
        quad = float(u @ self.M @ u)
        if quad <= 0.0:
            raise InvalidInput("direction carries no deviation energy")
        return (self.eps / np.sqrt(quad)) * u


def frobenius_ellipsoid(S: SMatrices, eps: float, k: int = 1) -> EllipsoidModel:
    """Ellipsoid of parameters whose total response-deviation energy is <= eps^2."""
    if not eps > 0.0:
        raise InvalidInput(f"eps must be positive, got {eps}")
    _check_k(S, k)
    return EllipsoidModel(theta0=S.theta0, S_k=S.S_k[k - 1], M=S.M, eps=float(eps))


@dataclass(frozen=True)
class SloppinessReport:
    """Spectrum and metrics of the constrained parameter-motion maximization.

    ``mu`` are the descending generalized eigenvalues of (S_k^T S_k, M);
    ``sm_abs = sqrt(mu[0])`` is the absolute sloppiness (largest parameter
    motion per unit deviation), ``sm_rel[i] = sqrt(mu[i]/mu[i+1])`` the
    relative metrics, and ``directions`` the associated unit parameter
    directions.  ``inconsistent`` flags infinite eigenvalues, which contradict
    the identifiability certificate and indicate numerical trouble.
    """

    mu: np.ndarray
    sm_abs: float
    sm_rel: np.ndarray
    directions: np.ndarray
    k: int
    eps_convention: str = EPS_CONVENTION

    @property
    def inconsistent(self) -> bool:
        return bool(np.any(np.isinf(self.mu)))


def _check_k(S: SMatrices, k: int) -> None:
    if not 1 <= k <= len(S.freqs):
        raise InvalidInput(f"k must be in 1..{len(S.freqs)}, got {k}")


def metrics(S: SMatrices, k: int = 1) -> SloppinessReport:
    """Sloppiness spectrum, metrics and extreme directions at block k.

    The spectrum is k-independent up to numerics; k only selects which
    parameter map carries the eigenvectors into theta space.
    """
    _check_k(S, k)
    Sk = S.S_k[k - 1]
    mu, vecs = numkit.gen_eig_psd_pencil_pairs(Sk.T @ Sk, S.M)
    dirs = []
    for i in range(vecs.shape[1]):
        d = Sk @ vecs[:, i]
        nrm = np.linalg.norm(d)
        dirs.append(d / nrm if nrm > 0 else d)
    directions = np.column_stack(dirs) if dirs else np.zeros((Sk.shape[0], 0))
    sm_abs = float(np.sqrt(mu[0])) if mu.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        sm_rel = np.sqrt(mu[:-1] / mu[1:]) if mu.size > 1 else np.zeros(0)
    return SloppinessReport(
        mu=mu,
        sm_abs=sm_abs,
        sm_rel=sm_rel,
        directions=directions,
        k=k,
    )


def deviation_sigmas(S: SMatrices, xi) -> np.ndarray:
    """Maximum singular value of the first-order deviation at every frequency."""
    x = np.asarray(xi, dtype=float).reshape(-1)
    if x.size != S.n_s:
        raise InvalidInput(f"xi must have length n_s={S.n_s}, got {x.size}")
    out = []
    for k, f in enumerate(S.factors):
        coords = S.complex_block(k) @ x
        D = numkit.unvec(coords, f.r_yv, f.r_zu) if coords.size else np.zeros((f.r_yv, f.r_zu))
        full = f.U_yv1 @ D @ f.V_zu1.T
        out.append(float(np.linalg.svd(full, compute_uv=False)[0]) if full.size else 0.0)
    return np.asarray(out)


def spectral_membership(S: SMatrices, xi, eps: float, k: int = 1) -> bool:
    """True when every per-frequency first-order deviation has sigma_max <= eps.

    The predicate intersects the constraint over all frequency blocks; ``k``
    is accepted for symmetry with the parameter maps but does not affect the
    answer.
    """
    _check_k(S, k)
    if eps < 0.0:
        raise InvalidInput(f"eps must be nonnegative, got {eps}")
    sig = deviation_sigmas(S, xi)
    return bool(np.all(sig <= eps * (1.0 + 1e-12)))
