"""Frequency-response evaluation of the transfer blocks and of H(lambda, theta).

Two evaluation routes are provided for H: the interconnection form

    H = G_yu + G_yv (I - P(theta) G_zv)^-1 P(theta) G_zu

and the assembled state-space form D(theta) + C(theta)(lambda E - A(theta))^-1
B(theta).  They must agree to 1e-9 relative; the determinant identity linking
the pencil and loop determinants is exposed as a built-in self check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, PoleProximity, WellPosednessViolation
from .model import DescriptorModel

__all__ = [
    "GBlocks",
    "ResponseSample",
    "lambda_at",
    "g_blocks",
    "h_lft",
    "h_statespace",
    "delta_h",
    "regularity_identity_check",
]

# Reject frequencies with sigma_min(lambda E - A_xx) below this multiple of
# ||A_xx||_2 (with an absolute floor for the all-zero corner case).
POLE_GUARD_RTOL = 1e-8


@dataclass(frozen=True)
class GBlocks:
    """The four transfer blocks of the parameter-free interconnection at one frequency."""

    omega: float
    lam: complex
    G_yu: np.ndarray
    G_yv: np.ndarray
    G_zu: np.ndarray
    G_zv: np.ndarray


@dataclass(frozen=True)
class ResponseSample:
    omega: float
    theta: np.ndarray
    H: np.ndarray


def lambda_at(time_domain: str, omega: float) -> complex:
    """Evaluation point on the frequency axis: j*omega or e^{j*omega}."""
    if time_domain == "continuous":
        return 1j * float(omega)
    if time_domain == "discrete":
        w = float(omega)
        if not (-math.pi < w <= math.pi + 1e-15):
            raise InvalidInput(f"discrete-time omega must lie in (-pi, pi], got {w}")
        return cmath.exp(1j * w)
    raise InvalidInput(f"unknown time domain {time_domain!r}")


def _pencil_solve(E: np.ndarray, A: np.ndarray, lam: complex, rhs: np.ndarray,
                  guard_scale: float, err: type[Exception], what: str):
    pencil = lam * E - A
    sig = np.linalg.svd(pencil, compute_uv=False)
    floor = max(POLE_GUARD_RTOL * guard_scale, 1e-14 * max(float(sig[0]), 1.0))
    if float(sig[-1]) < floor:
        raise err(f"{what}: sigma_min(lambda E - A) = {sig[-1]:.3e} below guard {floor:.3e}")
    lu, piv = scipy.linalg.lu_factor(pencil)
    return scipy.linalg.lu_solve((lu, piv), rhs)


def g_blocks(model: DescriptorModel, omega: float) -> GBlocks:
    """Evaluate the four G blocks at one frequency (pole-guarded)."""
    lam = lambda_at(model.time_domain, omega)
    guard_scale = float(np.linalg.norm(model.A_xx, 2)) if model.A_xx.size else 0.0
    B = np.hstack([model.B_xu, model.B_xv]).astype(complex)
    X = _pencil_solve(model.E, model.A_xx, lam, B, guard_scale, PoleProximity,
                      f"omega={omega}")
    C = np.vstack([model.C_yx, model.C_zx])
    D = np.block([[model.D_yu, model.D_yv], [model.D_zu, model.D_zv]])
    G = D + C @ X
    m_y, m_u = model.dims.m_y, model.dims.m_u
    return GBlocks(
        omega=float(omega),
        lam=lam,
        G_yu=G[:m_y, :m_u],
        G_yv=G[:m_y, m_u:],
        G_zu=G[m_y:, :m_u],
        G_zv=G[m_y:, m_u:],
    )


def h_lft(model: DescriptorModel, theta, omega: float) -> ResponseSample:
    """H via the interconnection route of the transfer blocks."""
    t = model.check_theta(theta)
    g = g_blocks(model, omega)
    P = model.p_of(t)
    m_v = model.dims.m_v
    loop = np.eye(m_v) - P @ g.G_zv
    sig = np.linalg.svd(loop, compute_uv=False)
    if float(sig[-1]) < 1e-12 * max(float(sig[0]), 1.0):
        raise WellPosednessViolation(
            f"I - P(theta) G_zv(j*omega) singular at omega={omega}, theta={t.tolist()}"
        )
    H = g.G_yu + g.G_yv @ np.linalg.solve(loop, P @ g.G_zu)
    return ResponseSample(omega=float(omega), theta=t, H=H)


def h_statespace(model: DescriptorModel, theta, omega: float) -> ResponseSample:
    """H via the assembled state-space matrices A(theta)..D(theta)."""
    t = model.check_theta(theta)
    lam = lambda_at(model.time_domain, omega)
    A, B, C, D = model.assembled(t)
    guard_scale = float(np.linalg.norm(A, 2)) if A.size else 0.0
    X = _pencil_solve(model.E, A, lam, B.astype(complex), guard_scale, PoleProximity,
                      f"omega={omega}, theta={t.tolist()}")
    return ResponseSample(omega=float(omega), theta=t, H=D + C @ X)


def delta_h(model: DescriptorModel, theta, theta0, omega: float) -> np.ndarray:
    """Response deviation H(.,theta) - H(.,theta0) via its factored form.

    The factored expression isolates the parameter increment P(theta) -
    P(theta0) inside the loop, which is better conditioned than subtracting
    two nearly equal responses; it agrees with the direct difference to 1e-9
    relative.
    """
    t = model.check_theta(theta)
    t0 = model.check_theta(theta0)
    g = g_blocks(model, omega)
    P0 = model.p_of(t0)
    dP = model.p_of(t) - P0
    m_v, m_z = model.dims.m_v, model.dims.m_z
    loop_l = np.eye(m_v) - P0 @ g.G_zv
    loop_r = np.eye(m_z) - g.G_zv @ P0
    for name, loop in (("I - P(theta0) G_zv", loop_l), ("I - G_zv P(theta0)", loop_r)):
        sig = np.linalg.svd(loop, compute_uv=False)
        if float(sig[-1]) < 1e-12 * max(float(sig[0]), 1.0):
            raise WellPosednessViolation(f"{name} singular at omega={omega}")
    left = g.G_yv @ np.linalg.solve(loop_l, dP)
    inner = np.eye(m_z) - np.linalg.solve(loop_r, g.G_zv @ dP)
    sig = np.linalg.svd(inner, compute_uv=False)
    if float(sig[-1]) < 1e-12 * max(float(sig[0]), 1.0):
        raise WellPosednessViolation(
            f"deviation loop singular at omega={omega}: theta outside the admissible set"
        )
    return left @ np.linalg.solve(inner, np.linalg.solve(loop_r, g.G_zu))


def regularity_identity_check(model: DescriptorModel, theta, lambda_probes) -> float:
    """Worst relative discrepancy across the determinant-identity chain.

    At each probe lambda the four expressions

        det(lambda E - A(theta)) det(I - P D_zv)
        det(lambda [E 0; 0 0] - [A_xx, B_xv P; C_zx, D_zv P - I])
        det(lambda E - A_xx) det(I - G_zv(lambda) P)
        det(lambda E - A_xx) det(I - P G_zv(lambda))

    must coincide; the returned value is the largest pairwise relative error.
    """
    t = model.check_theta(theta)
    P = model.p_of(t)
    d = model.dims
    A_t, _, _, _ = model.assembled(t)
    worst = 0.0
    for lam in lambda_probes:
        lam = complex(lam)
        lhs = np.linalg.det(lam * model.E - A_t) * np.linalg.det(
            np.eye(d.m_v) - P @ model.D_zv
        )
        E_big = np.block([
            [model.E, np.zeros((d.m_x, d.m_z))],
            [np.zeros((d.m_z, d.m_x)), np.zeros((d.m_z, d.m_z))],
        ])
        A_big = np.block([
            [model.A_xx, model.B_xv @ P],
            [model.C_zx, model.D_zv @ P - np.eye(d.m_z)],
        ])
        mid = np.linalg.det(lam * E_big - A_big)
        pencil = lam * model.E - model.A_xx
        det_free = np.linalg.det(pencil)
        lu = scipy.linalg.lu_factor(pencil)
        G_zv = model.D_zv + model.C_zx @ scipy.linalg.lu_solve(lu, model.B_xv.astype(complex))
        rhs_z = det_free * np.linalg.det(np.eye(d.m_z) - G_zv @ P)
        rhs_v = det_free * np.linalg.det(np.eye(d.m_v) - P @ G_zv)
        values = [lhs, mid, rhs_z, rhs_v]
        scale = max(max(abs(v) for v in values), 1e-300)
        spread = max(abs(a - b) for a in values for b in values)
        worst = max(worst, spread / scale)
    return worst
