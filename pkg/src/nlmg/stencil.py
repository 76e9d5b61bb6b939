"""Stencil construction for 1d nonlocal diffusion on a uniform mesh.

The continuous operator integrates second differences of u against a
radial kernel supported on (0, delta).  Discretizing with piecewise
linear elements on a uniform mesh of spacing h yields a symmetric
Toeplitz band whose halfwidth is ceil(delta/h).  This module builds
that band two independent ways (closed form and quadrature), assembles
the interior system, and folds the constrained exterior collar into the
right hand side.

Mesh convention: the domain (0, b) is split into 2**J cells, so
h = b / 2**J and the unknowns live at x_i = i*h for i = 1 .. 2**J - 1.
The collar values are prescribed at the r+1 nodes on each side that the
band can reach, including the endpoints x_0 = 0 and x_{N+1} = b.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .toeplitz import SymBandToeplitz

__all__ = [
    "HorizonRule",
    "parse_horizon",
    "constant_kernel",
    "Stencil",
    "closed_form_stencil",
    "quadrature_stencil",
    "boundary_vector",
    "Problem",
    "manufactured_problem",
    "LinearSystem",
    "assemble_system",
]


@dataclass(frozen=True)
class HorizonRule:
    """Interaction radius as a function of the mesh: delta(h) = c * h**beta.

    beta = 0 keeps a fixed radius, beta = 1 shrinks it with the mesh and
    turns the scheme into a local one, fractional beta interpolates.
    """

    c: float
    beta: float
    label: str = ""

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("horizon constant must be positive")
        if self.beta < 0:
            raise ValueError("horizon exponent must be nonnegative")

    def delta(self, h: float) -> float:
        return self.c * h**self.beta


_KH_RE = re.compile(r"^(\d+(?:\.\d+)?)?h$")


def parse_horizon(text: str) -> HorizonRule:
    """Parse a horizon rule from its command line form.

    Accepted forms: ``const:c``, ``scale:c,beta``, ``sqrt_h``, and the
    shorthand ``<k>h`` (``h``, ``5h``, ``2.5h`` ...).
    """
    text = text.strip()
    if text == "sqrt_h":
        return HorizonRule(1.0, 0.5, label="sqrt_h")
    if text.startswith("const:"):
        return HorizonRule(float(text[6:]), 0.0, label=text)
    if text.startswith("scale:"):
        parts = text[6:].split(",")
        if len(parts) != 2:
            raise ValueError(f"bad horizon {text!r}: want scale:c,beta")
        return HorizonRule(float(parts[0]), float(parts[1]), label=text)
    m = _KH_RE.match(text)
    if m:
        return HorizonRule(float(m.group(1) or 1.0), 1.0, label=text)
    raise ValueError(f"bad horizon {text!r}")


def constant_kernel(s, delta):
    """Kernel density 3/delta**3 on (0, delta), normalized so that the
    second moment integral of s**2 * kernel over (0, delta) equals 1."""
    return 3.0 / delta**3 * np.ones_like(np.asarray(s, dtype=float))


@dataclass(frozen=True)
class Stencil:
    """Interior row of the discrete operator.

    coeffs[k] multiplies the neighbor at distance k*h; coeffs[0] is the
    diagonal.  Zero row sum holds by construction, coeffs[0] is minus
    twice the sum of the off diagonal entries.
    """

    h: float
    delta: float
    coeffs: np.ndarray

    @property
    def ratio(self) -> float:
        return self.delta / self.h

    @property
    def reach(self) -> int:
        """Number of whole cells inside the interaction radius."""
        return math.floor(self.delta / self.h)

    @property
    def halfwidth(self) -> int:
        return len(self.coeffs) - 1

    def operator(self, n: int) -> SymBandToeplitz:
        return SymBandToeplitz(self.coeffs, n)


def closed_form_stencil(h: float, delta: float) -> Stencil:
    """Stencil coefficients for the constant kernel, in closed form.

    With R = delta/h and r = floor(R) the off diagonal weights are
    constant up to distance r-1, with corrected values at r and r+1
    that account for the kernel cutoff crossing a cell.  R <= 1 gives
    the standard three point Laplacian.
    """
    if h <= 0 or delta <= 0:
        raise ValueError("h and delta must be positive")
    R = delta / h
    r = math.floor(R)
    if R <= 1.0:
        return Stencil(h, delta, np.array([2.0, -1.0]) / h**2)
    a = np.zeros(r + 2)
    a[1:r] = -3.0 / (h * h * R**3)
    a[r] = -(3 * r - 1 + (R - r) * (r * r + r * R - 2 * R * R + 3 * r + 3 * R)) / (
        2 * h * h * R**3 * r
    )
    a[r + 1] = -((R - r) * (2 * R * R - r * R - r * r)) / (2 * h * h * R**3 * (r + 1))
    a[0] = -2.0 * a[1:].sum()
    return Stencil(h, delta, a)


def quadrature_stencil(
    h: float,
    delta: float,
    kernel: Optional[Callable] = None,
    order: int = 8,
) -> Stencil:
    """Stencil coefficients by composite Gauss-Legendre quadrature.

    Independent of the closed form: each weight is an integral of the
    hat function at distance p*h against s * kernel(s), split at cell
    boundaries so the integrand is smooth on every panel.  For the
    constant kernel the panels are quadratic polynomials and the rule
    is exact, which is what makes this a genuine cross check.

    Parameters
    ----------
    h, delta : mesh spacing and interaction radius.
    kernel : callable(s, delta), defaults to the constant kernel.
    order : Gauss-Legendre points per panel.
    """
    if h <= 0 or delta <= 0:
        raise ValueError("h and delta must be positive")
    if kernel is None:
        kernel = constant_kernel
    R = delta / h
    r = math.floor(R)
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def panel(lo, hi, p):
        # integral of hat_p(s) * s * kernel(s) over (lo, hi)
        if hi <= lo:
            return 0.0
        s = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        hat = 1.0 - np.abs(s / h - p)
        vals = hat * s * kernel(s, delta)
        return 0.5 * (hi - lo) * np.dot(weights, vals)

    a = np.zeros(r + 2)
    for p in range(1, r + 1):
        total = panel((p - 1) * h, p * h, p) + panel(p * h, min((p + 1) * h, delta), p)
        a[p] = -total / (p * h)
    # last weight integrates only over the leftover sliver (r*h, delta)
    a[r + 1] = -panel(r * h, delta, r + 1) / ((r + 1) * h)
    a[0] = -2.0 * a[1:].sum()
    return Stencil(h, delta, a)


def boundary_vector(stencil: Stencil, n: int, g_left: np.ndarray, g_right: np.ndarray) -> np.ndarray:
    """Right hand side contribution of the prescribed collar values.

    The band reaches s = stencil.halfwidth nodes past each end, so
    g_left holds the values at x_{1-s} .. x_0 (left to right) and
    g_right the values at x_{N+1} .. x_{N+s}.  Row i of the full
    operator couples to collar node j with weight a_{|i-j|}, and moving
    that known term across the equals sign flips its sign.
    """
    a = stencil.coeffs
    s = len(a) - 1
    g_left = np.asarray(g_left, dtype=float)
    g_right = np.asarray(g_right, dtype=float)
    if g_left.shape != (s,) or g_right.shape != (s,):
        raise ValueError(f"collar vectors must have length {s}")
    F = np.zeros(n)
    m = min(s, n)
    pad = np.concatenate([a, np.zeros(m + s + 1 - len(a))])
    # left collar: unknown i in 1..m, ghost j in 1-s..0, offset i-j
    offs = np.arange(1, m + 1)[:, None] - np.arange(1 - s, 1)[None, :]
    W = np.where(offs <= s, pad[np.minimum(offs, s)], 0.0)
    F[:m] -= W @ g_left
    # right collar mirrors: unknown i in n-m+1..n, ghost j in n+1..n+s
    offs = np.arange(n + 1, n + s + 1)[None, :] - np.arange(n - m + 1, n + 1)[:, None]
    W = np.where(offs <= s, pad[np.minimum(offs, s)], 0.0)
    F[n - m:] -= W @ g_right
    return F


@dataclass(frozen=True)
class Problem:
    """Continuous problem data on (0, b) with a prescribed collar.

    load is called as load(x, delta) because the natural forcing for a
    manufactured solution depends on the interaction radius.  exact is
    optional and only used for error reporting.
    """

    b: float
    horizon: HorizonRule
    load: Callable
    collar: Callable
    exact: Optional[Callable] = None

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("domain length must be positive")


def manufactured_problem(horizon: HorizonRule, b: float = 4.0) -> Problem:
    """Quartic benchmark problem u = x**2 (b-x)**2.

    The forcing splits into the local second derivative part and a flat
    delta**2 correction coming from the fourth derivative of u against
    the kernel's fourth moment.  The exact solution doubles as collar
    data, so the discrete error is pure truncation error.
    """

    def exact(x):
        return x**2 * (b - x) ** 2

    def load(x, delta):
        return -12.0 * x**2 + 12.0 * b * x - 2.0 * b**2 - 1.2 * delta**2

    return Problem(b=b, horizon=horizon, load=load, collar=exact, exact=exact)


@dataclass
class LinearSystem:
    """Assembled interior system A u = rhs plus the mesh it lives on."""

    operator: SymBandToeplitz
    rhs: np.ndarray
    x: np.ndarray
    h: float
    delta: float
    stencil: Stencil
    problem: Problem

    @property
    def n(self) -> int:
        return self.operator.n


def assemble_system(problem: Problem, J: int) -> LinearSystem:
    """Assemble the interior system at refinement level J.

    n = 2**J - 1 unknowns at x_i = i*h with h = b / 2**J.  The operator
    keeps only offsets that connect two unknowns; couplings that reach
    into the collar are evaluated against the prescribed data and moved
    to the right hand side.
    """
    if J < 2:
        raise ValueError("need at least 3 interior nodes, J >= 2")
    b = problem.b
    h = b / 2**J
    n = 2**J - 1
    delta = problem.horizon.delta(h)
    st = closed_form_stencil(h, delta)
    s = st.halfwidth
    x = h * np.arange(1, n + 1)
    gl = problem.collar(h * np.arange(1 - s, 1))
    gr = problem.collar(h * np.arange(n + 1, n + s + 1))
    rhs = problem.load(x, delta) + boundary_vector(st, n, gl, gr)
    return LinearSystem(
        operator=st.operator(n), rhs=rhs, x=x, h=h, delta=delta, stencil=st, problem=problem
    )
