"""Load coupling: the nonlinear map from cell loads to cell loads.

A cell's load is the fraction of its resource units busy serving demand.
Interference seen by a pixel grows with the loads of the other cells, which
lowers the pixel's SINR and raises the resources its own cell must spend,
so the network settles at a fixed point of the map built here.

For a pixel j served by cell i the interference state is reduced to

    u_j(rho) = sum_k rel_interference[i][k, j] * rho_k + rel_noise[i][j]

with everything expressed relative to the serving received power, so the
SINR is 1/u_j and the load contribution of the pixel is
1 / (rate_per_demand[j] * log2(1 + 1/u_j)).  The module also builds the two
linear companions of the map: its slope limit at infinite load, which sits
below the map everywhere, and its tangent plane at an anchor, which sits
above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class CouplingCoefficients:
    """Per-cell arrays describing the load coupling map of one instance.

    For cell i with m_i served, demanded pixels:

    - ``pixel_idx[i]``: global pixel indices, ascending, shape (m_i,)
    - ``rate_per_demand[i]``: interval bit budget per unit spectral
      efficiency divided by the pixel demand, shape (m_i,), positive
    - ``rel_interference[i]``: received power of every cell relative to the
      serving power, shape (num_cells, m_i); row i is zeroed so that a
      matrix product with a load vector sums over the other cells only
    - ``rel_noise[i]``: noise power relative to the serving power, (m_i,)
    """

    num_cells: int
    pixel_idx: tuple[np.ndarray, ...]
    rate_per_demand: tuple[np.ndarray, ...]
    rel_interference: tuple[np.ndarray, ...]
    rel_noise: tuple[np.ndarray, ...]


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    """Affine stand-in for the coupling map: slope @ (rho - anchor) + offset.

    ``offset`` equals the coupling map evaluated at ``anchor``.  ``kind`` is
    ``"asymptotic"`` for the infinite-load slope limit anchored at zero and
    ``"tangent"`` for the first-order expansion at the anchor.
    """

    slope: np.ndarray
    anchor: np.ndarray
    offset: np.ndarray
    kind: str

    def __post_init__(self):
        for name in ("slope", "anchor", "offset"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def coefficients(instance) -> CouplingCoefficients:
    """Reduce an instance to the per-cell coupling arrays.

    Pixels with zero demand contribute nothing to any load and are dropped
    here once, so every stored coefficient is strictly positive.
    """
    n = instance.num_cells
    powers = instance.powers()
    demands = instance.demands()
    received = powers[:, None] * instance.gains
    budget = instance.num_resource_units * instance.rate_scale

    pixel_idx = []
    rate_per_demand = []
    rel_interference = []
    rel_noise = []
    for i in range(n):
        served = np.array(
            [j for j in instance.serving.areas[i] if demands[j] > 0], dtype=np.int64
        )
        pixel_idx.append(served)
        if served.size == 0:
            rate_per_demand.append(np.empty(0))
            rel_interference.append(np.empty((n, 0)))
            rel_noise.append(np.empty(0))
            continue
        serving_power = received[i, served]
        rate_per_demand.append(budget / demands[served])
        rel = received[:, served] / serving_power
        rel[i, :] = 0.0  # own cell never interferes with itself
        rel_interference.append(rel)
        rel_noise.append(instance.noise_power / serving_power)
    return CouplingCoefficients(
        num_cells=n,
        pixel_idx=tuple(pixel_idx),
        rate_per_demand=tuple(rate_per_demand),
        rel_interference=tuple(rel_interference),
        rel_noise=tuple(rel_noise),
    )


def _interference(cc: CouplingCoefficients, i: int, rho: np.ndarray) -> np.ndarray:
    """u for every pixel of cell i: noise plus load-weighted relative interference."""
    return cc.rel_interference[i].T @ rho + cc.rel_noise[i]


def sinr(cc: CouplingCoefficients, cell: int, pixel: int, rho) -> float:
    """SINR of one pixel of ``cell`` at load state ``rho`` (both 0-based indices)."""
    rho = np.asarray(rho, dtype=np.float64)
    idx = cc.pixel_idx[cell]
    pos = np.searchsorted(idx, pixel)
    if pos >= idx.size or idx[pos] != pixel:
        raise ValueError(f"pixel {pixel} is not a demanded pixel of cell {cell}")
    u = cc.rel_interference[cell][:, pos] @ rho + cc.rel_noise[cell][pos]
    return 1.0 / u


def load_function(cc: CouplingCoefficients, rho) -> np.ndarray:
    """Evaluate the coupling map: the load each cell needs given loads ``rho``."""
    rho = np.asarray(rho, dtype=np.float64)
    out = np.zeros(cc.num_cells)
    for i in range(cc.num_cells):
        a = cc.rate_per_demand[i]
        if a.size == 0:
            continue
        u = _interference(cc, i, rho)
        # spectral efficiency log2(1 + 1/u), via log1p for large u accuracy
        out[i] = LN2 * np.sum(1.0 / (a * np.log1p(1.0 / u)))
    return out


def jacobian(cc: CouplingCoefficients, rho) -> np.ndarray:
    """Partial derivatives of the coupling map, row i = d load_i / d rho.

    The diagonal is exactly zero: a cell's own load does not enter its
    pixels' interference.
    """
    rho = np.asarray(rho, dtype=np.float64)
    jac = np.zeros((cc.num_cells, cc.num_cells))
    for i in range(cc.num_cells):
        a = cc.rate_per_demand[i]
        if a.size == 0:
            continue
        u = _interference(cc, i, rho)
        lg = np.log1p(1.0 / u)
        w = LN2 / (a * lg * lg * (u * u + u))
        jac[i] = cc.rel_interference[i] @ w
    return jac


def _curvature_weights(a, u):
    """Second-derivative weight per pixel; strictly negative for positive u."""
    lg = np.log1p(1.0 / u)
    # 2 - (2u + 1) log(1 + 1/u) < 0 for every u > 0
    neg = 2.0 - (2.0 * u + 1.0) * lg
    denom = (lg * lg * (u * u + u)) ** 2
    return LN2 * lg * neg / (a * denom)


def hessian_entry(cc: CouplingCoefficients, cell: int, k: int, h: int, rho) -> float:
    """Second partial derivative of cell ``cell``'s load w.r.t. rho_k and rho_h."""
    rho = np.asarray(rho, dtype=np.float64)
    a = cc.rate_per_demand[cell]
    if a.size == 0 or k == cell or h == cell:
        return 0.0
    u = _interference(cc, cell, rho)
    rel = cc.rel_interference[cell]
    return float(np.sum(rel[k] * rel[h] * _curvature_weights(a, u)))


def cell_hessian(cc: CouplingCoefficients, cell: int, rho) -> np.ndarray:
    """Full Hessian of one cell's load over the other cells' loads.

    Returns the (n-1) x (n-1) symmetric matrix with row/column ``cell``
    removed; it is negative definite wherever the cell serves demand.
    """
    rho = np.asarray(rho, dtype=np.float64)
    n = cc.num_cells
    a = cc.rate_per_demand[cell]
    others = [k for k in range(n) if k != cell]
    if a.size == 0:
        return np.zeros((n - 1, n - 1))
    u = _interference(cc, cell, rho)
    rel = cc.rel_interference[cell][others, :]
    return (rel * _curvature_weights(a, u)) @ rel.T


def asymptotic_linearization(cc: CouplingCoefficients) -> LinearizedSystem:
    """Slope limit of the coupling map at infinite load, anchored at zero.

    Entry (i, k) is ln(2) * sum over cell i's pixels of
    rel_interference / rate_per_demand; the offset is the map at zero load.
    This affine map underestimates the coupling map everywhere on the
    nonnegative orthant.
    """
    n = cc.num_cells
    slope = np.zeros((n, n))
    offset = np.zeros(n)
    for i in range(n):
        a = cc.rate_per_demand[i]
        if a.size == 0:
            continue
        slope[i] = cc.rel_interference[i] @ (LN2 / a)
        offset[i] = LN2 * np.sum(1.0 / (a * np.log1p(1.0 / cc.rel_noise[i])))
    return LinearizedSystem(slope=slope, anchor=np.zeros(n), offset=offset, kind="asymptotic")


def tangent_linearization(cc: CouplingCoefficients, anchor) -> LinearizedSystem:
    """First-order expansion of the coupling map at ``anchor``.

    Concavity puts this plane above the map everywhere, so its fixed point,
    when one exists, bounds the coupling fixed point from above.
    """
    anchor = np.asarray(anchor, dtype=np.float64)
    return LinearizedSystem(
        slope=jacobian(cc, anchor),
        anchor=anchor,
        offset=load_function(cc, anchor),
        kind="tangent",
    )


def evaluate(system: LinearizedSystem, rho) -> np.ndarray:
    """Evaluate the affine map at ``rho``."""
    rho = np.asarray(rho, dtype=np.float64)
    return system.slope @ (rho - system.anchor) + system.offset
