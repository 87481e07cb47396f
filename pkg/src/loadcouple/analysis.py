"""Demand-scaling studies built on the exact linear feasibility criterion.

All questions here reduce to scaling every pixel demand by a factor s and
asking where the network stops admitting a load fixed point.  Because the
asymptotic slope matrix grows linearly in s, feasibility is monotone in s
and the boundary is a single scale, located by bisection on the linear
verdict alone; fixed points are only computed where they exist.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linfeas, solver

BOUNDARY_BRACKET_LIMIT = 60  # doublings/halvings allowed while bracketing


class PreconditionError(ValueError):
    """An analysis was asked about a regime where its question has no answer."""


@dataclass(frozen=True, eq=False)
class SweepRow:
    """One demand scale: verdict, spectral radius and, when feasible, load vectors."""

    scale: float
    feasible: bool
    spectral_radius: float
    rho_star: Optional[np.ndarray]
    rho_lower: Optional[np.ndarray]
    solve_status: Optional[str]


@dataclass(frozen=True)
class BoundaryCertificate:
    """Bisection outcome: the boundary estimate bracketed by witnessed scales."""

    scale: float
    last_feasible: float
    first_infeasible: float


@dataclass(frozen=True, eq=False)
class CellBounds:
    """Fixed point and both linear bounds for one cell, with relative gaps in percent."""

    cell_id: int
    rho_star: float
    rho_lower: float
    rho_upper: float
    lower_gap_pct: float
    upper_gap_pct: float


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Side-by-side verdict for two configurations of the same cell set.

    ``verdict`` is one of ``"equal"``, ``"a_dominates"``, ``"b_dominates"``,
    ``"incomparable"``.  Load columns are None for a configuration that is
    infeasible at the base demand.
    """

    verdict: str
    boundary_a: float
    boundary_b: float
    rho_star_a: Optional[np.ndarray]
    rho_star_b: Optional[np.ndarray]
    bounds_a: Optional[list[CellBounds]]
    bounds_b: Optional[list[CellBounds]]


def _solve_at_scale(instance, scale, start=None, method=solver.FIXED_POINT):
    scaled = instance.with_demand_scale(scale)
    feasible, outcome = linfeas.feasibility_check(scaled)
    if not feasible:
        return SweepRow(
            scale=scale,
            feasible=False,
            spectral_radius=outcome.spectral_radius,
            rho_star=None,
            rho_lower=None,
            solve_status=None,
        )
    config = solver.SolverConfig(method=method, start=start)
    report = solver.solve(scaled, config)
    return SweepRow(
        scale=scale,
        feasible=True,
        spectral_radius=outcome.spectral_radius,
        rho_star=report.fixed_point,
        rho_lower=report.lower,
        solve_status=report.status,
    )


def demand_sweep(instance, scales, workers: int = 1) -> list[SweepRow]:
    """Fixed point and bounds across a grid of demand scales.

    Sequential sweeps warm-start each solve from the previous feasible fixed
    point (the loads grow with s, so the previous point is a good Newton
    start); with ``workers`` > 1 the scales are solved independently in a
    thread pool and warm starting is skipped.  Row order always matches the
    input grid.
    """
    scales = [float(s) for s in scales]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda s: _solve_at_scale(instance, s), scales))
    rows: list[SweepRow] = []
    previous = None
    for s in scales:
        method = solver.NEWTON if previous is not None else solver.FIXED_POINT
        row = _solve_at_scale(instance, s, start=previous, method=method)
        if row.rho_star is not None:
            previous = row.rho_star
        rows.append(row)
    return rows


def feasibility_boundary(instance, lo: float, hi: float, tol: float = 1e-6) -> BoundaryCertificate:
    """Bisect the demand scale at which the network stops being feasible.

    Preconditions: the instance must be feasible at ``lo`` and infeasible at
    ``hi``; anything else raises ValueError.  Bisection runs on the linear
    verdict until the bracket's relative width drops below ``tol``.
    """
    if not 0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
    feasible_lo, _ = linfeas.feasibility_check(instance.with_demand_scale(lo))
    if not feasible_lo:
        raise PreconditionError(f"instance is infeasible at lo={lo}")
    feasible_hi, _ = linfeas.feasibility_check(instance.with_demand_scale(hi))
    if feasible_hi:
        raise PreconditionError(f"instance is feasible at hi={hi}")
    while (hi - lo) > tol * lo:
        mid = 0.5 * (lo + hi)
        feasible_mid, _ = linfeas.feasibility_check(instance.with_demand_scale(mid))
        if feasible_mid:
            lo = mid
        else:
            hi = mid
    return BoundaryCertificate(scale=0.5 * (lo + hi), last_feasible=lo, first_infeasible=hi)


def _bracketed_boundary(instance, tol: float = 1e-6) -> float:
    """Boundary scale with the bracket found automatically from scale 1."""
    lo = hi = 1.0
    feasible, _ = linfeas.feasibility_check(instance)
    if feasible:
        for _ in range(BOUNDARY_BRACKET_LIMIT):
            hi *= 2.0
            ok, _ = linfeas.feasibility_check(instance.with_demand_scale(hi))
            if not ok:
                break
            lo = hi
        else:
            raise ValueError("no infeasible scale found while bracketing the boundary")
    else:
        for _ in range(BOUNDARY_BRACKET_LIMIT):
            lo *= 0.5
            ok, _ = linfeas.feasibility_check(instance.with_demand_scale(lo))
            if ok:
                break
            hi = lo
        else:
            raise ValueError("no feasible scale found while bracketing the boundary")
    return feasibility_boundary(instance, lo, hi, tol).scale


def bound_quality(instance) -> list[CellBounds]:
    """Per-cell gap of both linear bounds against the computed fixed point.

    The tangent bound is anchored at the asymptotic solution.  Gaps are
    |bound - fixed point| / fixed point in percent; cells with a zero fixed
    point (no demand) report zero gaps.  Raises ValueError on infeasible
    instances.
    """
    report = solver.solve(instance)
    if report.status == solver.INFEASIBLE:
        raise PreconditionError("no bound quality on an infeasible instance")
    rho = report.fixed_point
    lower = report.lower
    upper = linfeas.upper_bound(instance, lower)
    out = []
    for i, cell in enumerate(instance.cells):
        if rho[i] > 0.0:
            lower_gap = abs(lower[i] - rho[i]) / rho[i] * 100.0
            upper_gap = (
                abs(upper[i] - rho[i]) / rho[i] * 100.0 if upper is not None else math.nan
            )
        else:
            lower_gap = upper_gap = 0.0
        out.append(
            CellBounds(
                cell_id=cell.id,
                rho_star=float(rho[i]),
                rho_lower=float(lower[i]),
                rho_upper=float(upper[i]) if upper is not None else math.nan,
                lower_gap_pct=lower_gap,
                upper_gap_pct=upper_gap,
            )
        )
    return out


def compare_configs(instance_a, instance_b, boundary_tol: float = 1e-4) -> ComparisonReport:
    """Rank two configurations by feasibility headroom and base-demand loads.

    A configuration dominates when its feasibility boundary scale is
    strictly higher and its worst-cell load is strictly lower at the base
    demand (or, if only one side is feasible at base demand, the feasible
    one dominates).  Identical load vectors and boundaries are ``"equal"``;
    everything else is ``"incomparable"``.
    """
    if instance_a.num_cells != instance_b.num_cells:
        raise ValueError("configurations must have the same number of cells")
    boundary_a = _bracketed_boundary(instance_a, boundary_tol)
    boundary_b = _bracketed_boundary(instance_b, boundary_tol)

    def base_state(instance):
        feasible, _ = linfeas.feasibility_check(instance)
        if not feasible:
            return None, None
        bounds = bound_quality(instance)
        return np.array([b.rho_star for b in bounds]), bounds

    rho_a, bounds_a = base_state(instance_a)
    rho_b, bounds_b = base_state(instance_b)

    if rho_a is not None and rho_b is not None:
        if boundary_a == boundary_b and np.array_equal(rho_a, rho_b):
            verdict = "equal"
        elif boundary_a > boundary_b and np.max(rho_a) < np.max(rho_b):
            verdict = "a_dominates"
        elif boundary_b > boundary_a and np.max(rho_b) < np.max(rho_a):
            verdict = "b_dominates"
        else:
            verdict = "incomparable"
    elif rho_a is not None:
        verdict = "a_dominates"
    elif rho_b is not None:
        verdict = "b_dominates"
    else:
        # neither feasible at base demand: only the boundary scales can rank them
        if boundary_a > boundary_b:
            verdict = "a_dominates"
        elif boundary_b > boundary_a:
            verdict = "b_dominates"
        else:
            verdict = "equal"
    return ComparisonReport(
        verdict=verdict,
        boundary_a=boundary_a,
        boundary_b=boundary_b,
        rho_star_a=rho_a,
        rho_star_b=rho_b,
        bounds_a=bounds_a,
        bounds_b=bounds_b,
    )
