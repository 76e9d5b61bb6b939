"""Measured convergence quantities and the bounds they are checked against.

Everything here is diagnostic: dense materializations of error
propagation operators, extreme eigenvalues, conditioning sweeps, the
positivity of the stride mixture that underpins the smoothing analysis,
and a cost model for the cycle.  Nothing in this module is needed to
run the solver; it exists so the contraction claims can be measured
instead of trusted.

Dense work is capped: anything that would materialize a matrix above
DENSE_CAP unknowns is refused rather than silently taking minutes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from .multigrid import (
    Hierarchy,
    MGParams,
    build_hierarchy,
    default_params,
    galerkin_coarsen,
    v_cycle,
)
from .stencil import HorizonRule, assemble_system, manufactured_problem
from .toeplitz import DENSE_CAP, SymBandMatrix, SymBandToeplitz

__all__ = [
    "SmoothingConstants",
    "tgm_bound",
    "vcycle_bound",
    "energy_operator_norm",
    "measured_tgm_factor",
    "measured_vcycle_contraction",
    "smallest_eigenvalue",
    "coercivity_floor",
    "condition_number",
    "condition_scaling",
    "jacobi_spectrum_window",
    "stride_mixture_band",
    "stride_mixture_definiteness",
    "stride_mixture_symbol",
    "measured_damping_ratio",
    "cost_model",
]


@dataclass(frozen=True)
class SmoothingConstants:
    """Damped Jacobi smoothing numbers: eta = 2 w (1 - w) / eta0 with the
    diagonal scaling cap eta0, which is 2 for these operators."""

    omega: float
    eta0: float = 2.0

    @property
    def eta(self) -> float:
        return 2.0 * self.omega * (1.0 - self.omega) / (self.eta0 / 2.0)


def tgm_bound(omega: float, local: bool = False) -> float:
    """Two grid energy contraction bound for one post smoothing sweep.

    The generic banded bound is sqrt(1 - eta/6); when the stencil has
    collapsed to the local three point operator the coarse space
    approximation sharpens and the bound drops to sqrt(1 - eta).
    """
    eta = 2.0 * omega * (1.0 - omega)
    return math.sqrt(1.0 - eta) if local else math.sqrt(1.0 - eta / 6.0)


def vcycle_bound(sweeps: int, omega: float) -> float:
    """V-cycle energy bound 1/(2 l w + 1) for l pre plus l post sweeps."""
    return 1.0 / (2.0 * sweeps * omega + 1.0)


def _dense(op) -> np.ndarray:
    if op.n > DENSE_CAP:
        raise ValueError(f"dense materialization of n={op.n} refused")
    return op.to_dense()


def energy_operator_norm(A: np.ndarray, E: np.ndarray) -> float:
    """Operator norm of E in the inner product induced by s.p.d. A.

    Computed as the spectral norm of U E U^{-1} where A = U^T U.
    """
    U = scipy.linalg.cholesky(A, lower=False)
    X = scipy.linalg.solve_triangular(U, E.T, trans="T", lower=False).T
    return float(np.linalg.norm(U @ X, 2))


def _dense_restriction(n: int) -> np.ndarray:
    nc = (n - 1) // 2
    R = np.zeros((nc, n))
    for i in range(nc):
        R[i, 2 * i : 2 * i + 3] = (0.25, 0.5, 0.25)
    return R


def measured_tgm_factor(
    J: int, horizon: HorizonRule, b: float = 4.0, omega: float = 1.0 / 3.0
) -> dict:
    """Exact energy norm of the two grid error operator K (I - P Ac^-1 R A)
    with one damped Jacobi sweep K, against its theoretical bound."""
    system = assemble_system(manufactured_problem(horizon, b), J)
    op = system.operator
    A = _dense(op)
    Ac = _dense(galerkin_coarsen(op))
    n = op.n
    R = _dense_restriction(n)
    P = 2.0 * R.T
    K = np.eye(n) - omega * (A / np.diag(A)[:, None])
    T = np.eye(n) - P @ np.linalg.solve(Ac, R @ A)
    measured = energy_operator_norm(A, K @ T)
    local = op.halfwidth <= 1
    return {
        "n": n,
        "ratio": system.delta / system.h,
        "measured": measured,
        "bound": tgm_bound(omega, local=local),
        "bound_generic": tgm_bound(omega, local=False),
    }


def measured_vcycle_contraction(
    J: int, horizon: HorizonRule, sweeps: int, omega: float = 0.5, b: float = 4.0
) -> dict:
    """Exact energy norm of the full V-cycle error operator.

    The cycle is affine in (v, f), so running it with f = 0 on every
    basis vector materializes I - B A column by column exactly.
    """
    system = assemble_system(manufactured_problem(horizon, b), J)
    hier = build_hierarchy(system, "galerkin")
    n = system.n
    if n > DENSE_CAP:
        raise ValueError(f"dense materialization of n={n} refused")
    params = MGParams(m1=sweeps, m2=sweeps, omega_pre=omega, omega_post=omega)
    zero = np.zeros(n)
    E = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        E[:, i] = v_cycle(hier, params, zero, e)
    A = _dense(system.operator)
    return {
        "n": n,
        "levels": hier.depth,
        "measured": energy_operator_norm(A, E),
        "bound": vcycle_bound(sweeps, omega),
    }


def coercivity_floor(b: float) -> float:
    """Mesh independent lower bound 1/(27 b**2) on the smallest eigenvalue,
    valid for every spacing and every interaction radius below b."""
    return 1.0 / (27.0 * b * b)


def smallest_eigenvalue(op) -> float:
    sb = op.to_symband() if isinstance(op, SymBandToeplitz) else op
    return float(sb.eigenvalues(which=(0, 0))[0])


def condition_number(op) -> float:
    sb = op.to_symband() if isinstance(op, SymBandToeplitz) else op
    lo = sb.eigenvalues(which=(0, 0))[0]
    hi = sb.eigenvalues(which=(op.n - 1, op.n - 1))[0]
    return float(hi / lo)


def condition_scaling(horizon: HorizonRule, Js: Sequence[int], b: float = 4.0) -> dict:
    """Condition numbers along a refinement path plus the growth verdict.

    Fixed radius keeps the conditioning bounded (successive ratios near
    one), a radius proportional to h recovers the local 1/h**2 growth.
    """
    conds = []
    for J in Js:
        system = assemble_system(manufactured_problem(horizon, b), J)
        conds.append(condition_number(system.operator))
    conds = np.array(conds)
    ratios = conds[1:] / conds[:-1]
    out = {"J": list(Js), "cond": conds.tolist(), "ratios": ratios.tolist()}
    if horizon.beta == 0.0:
        out["ok"] = bool(np.all(ratios <= 1.5))
    elif horizon.beta == 1.0:
        slopes = np.log2(ratios)
        out["slopes"] = slopes.tolist()
        out["ok"] = bool(np.all(np.abs(slopes - 2.0) <= 0.2))
    else:
        out["ok"] = True
    return out


def jacobi_spectrum_window(hier: Hierarchy, tol: float = 1e-10) -> List[dict]:
    """Largest eigenvalue of the diagonally scaled operator per level.

    The window [1, 3) is what keeps damped Jacobi a smoother on every
    level; with no positive off diagonal entries the classical bound 2
    applies instead.
    """
    rows = []
    for lv in hier.levels:
        op = lv.op
        sb = op.to_symband() if isinstance(op, SymBandToeplitz) else op
        d = sb.ab[0].copy()
        if np.any(d <= 0):
            raise ValueError("nonpositive diagonal, scaling undefined")
        rt = np.sqrt(d)
        ab = sb.ab.copy()
        s, n = ab.shape[0] - 1, ab.shape[1]
        for k in range(s + 1):
            ab[k, : n - k] /= rt[: n - k] * rt[k:]
        lam = float(SymBandMatrix(ab).eigenvalues(which=(n - 1, n - 1))[0])
        first_off = sb.ab[1].max() if s >= 1 else 0.0
        cap = 2.0 if first_off <= 0 else 3.0
        rows.append(
            {
                "n": n,
                "lam_max": lam,
                "cap": cap,
                "ok": bool(1.0 - tol <= lam <= cap + tol if cap == 2.0 else 1.0 - tol <= lam < cap),
            }
        )
    return rows


def stride_mixture_band(n_terms: int, dim: int) -> np.ndarray:
    """Band of 2 * sum_{j<=n} (stride j Laplacian) - n * (stride 1 Laplacian).

    Strides at or beyond dim contribute only their diagonal.  This is
    the matrix whose positive definiteness lets a single stride-1
    smoother serve the whole mixture.
    """
    if n_terms < 1 or dim < 1:
        raise ValueError("n_terms and dim must be positive")
    smax = min(n_terms, dim - 1)
    band = np.zeros(smax + 1)
    band[0] = 2.0 * n_terms
    if smax >= 1:
        band[1] = float(n_terms) - 2.0
        band[2:] = -2.0
    return band


def stride_mixture_definiteness(n_terms: int, dim: int) -> float:
    """Smallest eigenvalue of the stride mixture, positive for every
    n_terms >= 1 and every dimension."""
    band = stride_mixture_band(n_terms, dim)
    op = SymBandToeplitz(band, dim)
    return smallest_eigenvalue(op)


def stride_mixture_symbol(n_terms: int, theta) -> np.ndarray:
    """Lattice symbol of the mixture divided by 4 n: cos(t/2)**2 minus the
    average of cos(k t) over k = 1..n.  Nonnegative on [0, pi], touching
    zero at t = 0."""
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, n_terms + 1)
    avg = np.cos(np.multiply.outer(theta, k)).mean(axis=-1)
    return np.cos(theta / 2.0) ** 2 - avg


def measured_damping_ratio(band: np.ndarray) -> float:
    """Diagonal to nearest neighbor ratio a0 / (-2 a1), a lower bound on
    how much of the operator the stride-1 part controls."""
    band = np.asarray(band, dtype=float)
    if len(band) < 2 or band[1] == 0:
        raise ValueError("no nearest neighbor coupling")
    return float(band[0] / (-2.0 * band[1]))


def cost_model(
    strategy: str,
    horizon: HorizonRule,
    Js: Sequence[int],
    b: float = 4.0,
    params: Optional[MGParams] = None,
) -> dict:
    """Per-cycle flop estimate and coefficient storage along a refinement path.

    The matvec cost per level is the cheaper of the direct banded count
    2n(2s+1) and the FFT estimate, matching what matvec actually picks.
    Storage is counted in banded coefficient slots (s+1 per row), the
    footprint a general banded representation of each level would need;
    Toeplitz levels physically store one row but are charged the same
    way so the reported number is an upper bound on any representation
    this hierarchy could use.
    """
    if params is None:
        params = default_params(strategy)
    rows = []
    for J in Js:
        system = assemble_system(manufactured_problem(horizon, b), J)
        hier = build_hierarchy(system, strategy)
        ops = 0.0
        slots = 0
        actual = 0
        for li, lv in enumerate(hier.levels):
            op = lv.op
            if isinstance(op, SymBandToeplitz):
                mv = min(op.flops_direct(), op.flops_fft())
                actual += op.halfwidth + 1
            else:
                mv = 2.0 * op.n * (2 * op.halfwidth + 1)
                actual += (op.halfwidth + 1) * op.n
            slots += (op.halfwidth + 1) * op.n
            sweeps = params.m1 + params.m2 + 1
            if li == 0:
                sweeps += 1  # convergence check residual
            ops += sweeps * mv + 6.0 * op.n
        finest = hier.levels[0].op
        rows.append(
            {
                "J": J,
                "N": 2**J,
                "n": finest.n,
                "levels": hier.depth,
                "ops_per_cycle": ops,
                "storage_slots": slots,
                "storage_actual": actual,
                "finest_slots": (finest.halfwidth + 1) * finest.n,
            }
        )
    logn = np.log2([r["N"] for r in rows])
    logops = np.log2([r["ops_per_cycle"] for r in rows])
    slope = float(np.polyfit(logn, logops, 1)[0]) if len(rows) > 1 else float("nan")
    storage_ok = all(r["storage_slots"] <= 2 * r["finest_slots"] for r in rows)
    return {"rows": rows, "slope": slope, "storage_ok": storage_ok}
