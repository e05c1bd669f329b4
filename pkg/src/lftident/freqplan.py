"""Grid search for a small certifying set of frequencies.

Implements the recursive selection: pick an anchor frequency maximizing the
rank of its Xi block, keep a right-null basis Z of everything absorbed so
far, then greedily add the frequency whose U_Pi2 block removes the most of
Z, until Z is empty (certified) or no grid point makes progress.

A stall is reported as ``no-progress-on-grid``, never as a negative
identifiability certificate: a finite grid cannot prove that no frequency
exists.  The plan carries a densification hint and the search accepts a
number of refinement rounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import identifiability as ident
from . import numkit, response
from .errors import ConstructionError, EmptyGrid, PoleProximity
from .model import DescriptorModel

__all__ = [
    "CERTIFIED",
    "NO_PROGRESS_ON_GRID",
    "NOT_IDENTIFIABLE",
    "FrequencyGrid",
    "FrequencyPlan",
    "default_grid",
    "search_frequencies",
]

CERTIFIED = "certified"
NO_PROGRESS_ON_GRID = "no-progress-on-grid"
NOT_IDENTIFIABLE = ident.NOT_IDENTIFIABLE

DEFAULT_GRID_POINTS = 200
DEFAULT_W_MIN = 1e-2
DEFAULT_W_MAX = 1e2

# Candidates are ranked by the pair (robust rank, margin rank): adjacent grid
# points often add rows that are nearly dependent on what is already
# absorbed, and counting only margin-level gains would let the smallest-omega
# tie-break select exactly those fragile candidates.


def _score(M) -> tuple[int, int]:
    robust = numkit.rank_of(M, rtol=ident.ROBUST_RTOL, scale_floor=1.0).rank
    margin = numkit.rank_of(M, rtol=ident.DECISION_RTOL, scale_floor=1.0).rank
    return robust, margin


@dataclass(frozen=True)
class FrequencyGrid:
    """Ascending pole-guarded candidate frequencies."""

    points: np.ndarray
    time_domain: str
    n_guarded: int

    def __post_init__(self):
        if self.points.size == 0:
            raise EmptyGrid("every candidate frequency was removed by the pole guard")


@dataclass(frozen=True)
class FrequencyPlan:
    """Outcome of the search: selected frequencies and the shrinking trace.

    ``rank_trace`` holds the unresolved dimension after each selection and is
    strictly decreasing; ``certified`` plans end at zero and carry the
    re-verification verdict.  ``refine_hint`` suggests (w_min, w_max,
    n_points) for a denser grid after a stall.
    """

    status: str
    selected: tuple[float, ...]
    rank_trace: tuple[int, ...]
    verdict: ident.IdentifiabilityVerdict | None
    refine_hint: tuple[float, float, int] | None = None


def _guarded_points(model: DescriptorModel, raw: np.ndarray) -> tuple[np.ndarray, int]:
    kept = []
    for w in raw:
        try:
            response.g_blocks(model, float(w))
        except PoleProximity:
            continue
        kept.append(float(w))
    return np.asarray(kept), raw.size - len(kept)


def default_grid(
    model: DescriptorModel,
    n_points: int = DEFAULT_GRID_POINTS,
    w_min: float = DEFAULT_W_MIN,
    w_max: float = DEFAULT_W_MAX,
) -> FrequencyGrid:
    """Logarithmic grid over [w_min, w_max] (continuous) or uniform over (0, pi].

    Points failing the pole guard are removed; an empty result raises
    EmptyGrid.
    """
    if model.time_domain == "continuous":
        raw = np.geomspace(w_min, w_max, n_points)
    else:
        raw = np.linspace(np.pi / n_points, np.pi, n_points)
    points, dropped = _guarded_points(model, raw)
    return FrequencyGrid(points=points, time_domain=model.time_domain, n_guarded=dropped)


def _grid_pis(model, theta0, grid: FrequencyGrid):
    out = []
    for w in grid.points:
        try:
            out.append((float(w), ident.pi_at(model, theta0, float(w))))
        except PoleProximity:
            continue
    if not out:
        raise EmptyGrid("no grid point survived the pole guard")
    return out


def _search_once(model: DescriptorModel, theta0, grid: FrequencyGrid,
                 psi_dec, fnrr_seed: int) -> FrequencyPlan:
    m_z = model.dims.m_z
    q = model.dims.q
    cand = _grid_pis(model, theta0, grid)

    # S0: a frequency whose Pi_bar_j is FCR certifies on its own.  Candidates
    # vetoed by the sensitivity gate are skipped, not fatal: another grid
    # point may carry a healthier margin.
    for w, p in cand:
        if ident.single_freq_shortcut(p):
            verdict = ident.upsilon_test(model, theta0, [w], pis=[p],
                                         psi_dec=psi_dec, fnrr_seed=fnrr_seed)
            if verdict.status == ident.IDENTIFIABLE:
                return FrequencyPlan(
                    status=CERTIFIED,
                    selected=(w,),
                    rank_trace=(0,),
                    verdict=verdict,
                )
            if verdict.status == ident.NOT_IDENTIFIABLE:
                raise ConstructionError(
                    f"shortcut frequency omega={w} certified the opposite verdict"
                )

    # S1: anchor frequency maximizing the rank of its Xi block, among those
    # passing the side condition; ties break toward the smallest omega.
    best = None
    for w, p in cand:
        if not p.side_fcr:
            continue
        score = _score(ident.upsilon_block(p, psi_dec, True, m_z))
        if best is None or score > best[0]:
            best = (score, w, p)
    if best is None:
        return FrequencyPlan(
            status=NO_PROGRESS_ON_GRID,
            selected=(),
            rank_trace=(),
            verdict=None,
            refine_hint=_hint(grid),
        )
    _, w1, p1 = best
    selected = [w1]
    pis = [p1]
    Z = numkit.right_null_basis(ident.upsilon_block(p1, psi_dec, True, m_z),
                                rtol=ident.DECISION_RTOL, scale_floor=1.0)
    trace = [Z.shape[1]]

    # S3-S5: greedy absorption with strictly shrinking Z.
    while Z.shape[1] > 0:
        best = None
        for w, p in cand:
            if w in selected:
                continue
            gain = _score(ident.upsilon_block(p, psi_dec, False, m_z) @ Z)
            if best is None or gain > best[0]:
                best = (gain, w, p)
        if best is None or best[0] == (0, 0):
            return FrequencyPlan(
                status=NO_PROGRESS_ON_GRID,
                selected=tuple(selected),
                rank_trace=tuple(trace),
                verdict=None,
                refine_hint=_hint(grid),
            )
        gain, w, p = best
        selected.append(w)
        pis.append(p)
        Z = Z @ numkit.right_null_basis(ident.upsilon_block(p, psi_dec, False, m_z) @ Z,
                                        rtol=ident.DECISION_RTOL, scale_floor=1.0)
        trace.append(Z.shape[1])
        if len(selected) > q + 1:
            raise ConstructionError("selection exceeded the parameter dimension bound")

    verdict = ident.upsilon_test(model, theta0, selected, pis=pis,
                                 psi_dec=psi_dec, fnrr_seed=fnrr_seed)
    if verdict.status == ident.NOT_IDENTIFIABLE:
        raise ConstructionError(
            f"certified selection {selected} failed re-verification: {verdict.reason}"
        )
    if verdict.status == ident.INCONCLUSIVE:
        # Margins too thin to certify; treat like a stall so refinement can try
        # better-conditioned frequencies.
        return FrequencyPlan(
            status=NO_PROGRESS_ON_GRID,
            selected=tuple(selected),
            rank_trace=tuple(trace),
            verdict=verdict,
            refine_hint=_hint(grid),
        )
    return FrequencyPlan(
        status=CERTIFIED,
        selected=tuple(selected),
        rank_trace=tuple(trace),
        verdict=verdict,
    )


def _hint(grid: FrequencyGrid) -> tuple[float, float, int]:
    pts = grid.points
    return (float(pts[0]), float(pts[-1]), 4 * pts.size)


def search_frequencies(
    model: DescriptorModel,
    theta0,
    grid: FrequencyGrid | None = None,
    refine: int = 0,
    fnrr_seed: int = 20260808,
) -> FrequencyPlan:
    """Run the S0-S5 search; optionally retry on x4 denser grids after stalls.

    A rank-deficient Psi short-circuits to ``not-identifiable`` (no frequency
    set can help).  A stalled grid search is *not* a negative certificate and
    is reported as ``no-progress-on-grid`` with a refinement hint.
    """
    theta0 = model.check_theta(theta0)
    psi_dec = ident.psi(model)
    if not psi_dec.is_fcr:
        verdict = ident.upsilon_test(model, theta0, [1.0], psi_dec=psi_dec,
                                     fnrr_seed=fnrr_seed)
        return FrequencyPlan(
            status=NOT_IDENTIFIABLE,
            selected=(),
            rank_trace=(),
            verdict=verdict,
        )
    ident.check_fnrr(model, seed=fnrr_seed)
    if grid is None:
        grid = default_grid(model)

    plan = _search_once(model, theta0, grid, psi_dec, fnrr_seed)
    rounds = 0
    while plan.status == NO_PROGRESS_ON_GRID and rounds < refine:
        rounds += 1
        w_min, w_max, n = plan.refine_hint
        if model.time_domain == "continuous":
            grid = default_grid(model, n_points=n, w_min=w_min, w_max=w_max)
        else:
            grid = default_grid(model, n_points=n)
        plan = _search_once(model, theta0, grid, psi_dec, fnrr_seed)
    return plan
