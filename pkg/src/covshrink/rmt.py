"""Random-matrix layer: Stieltjes transforms and the Marchenko-Pastur law.

Covers the pieces the eigenvalue shrinker is built from: the empirical
Stieltjes transform, the naive gap-sum estimate of the Hilbert transform,
the MP density/CDF for the identity population, the closed-form boundary
transform, and the quantile map that carries a sample eigenvalue to its
population counterpart.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import EigenvalueTieError, NumericError

TIE_GAP = 1e-12
QUAD_TOL = 1e-8


@dataclass(frozen=True)
class MPModel:
    """Marchenko-Pastur model for concentration c = lim p/n in (0, 1).

    Support edges are lambda_minus = (1 - sqrt(c))^2 and
    lambda_plus = (1 + sqrt(c))^2.
    """

    c: float
    lambda_minus: float = field(init=False)
    lambda_plus: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"concentration must lie in (0, 1), got {self.c}")
        r = math.sqrt(self.c)
        object.__setattr__(self, "lambda_minus", (1.0 - r) ** 2)
        object.__setattr__(self, "lambda_plus", (1.0 + r) ** 2)


def empirical_stieltjes(eigvals, z: complex) -> complex:
    """Stieltjes transform of the empirical spectral distribution.

    m(z) = (1/p) * sum_i 1 / (l_i - z) for z in the upper half-plane.
    """
    z = complex(z)
    if z.imag <= 0.0:
        raise ValueError(f"Stieltjes argument must have positive imaginary part, got {z}")
    l = np.asarray(eigvals, dtype=float)
    return complex(np.mean(1.0 / (l - z)))


def naive_hilbert(l, i: int) -> float:
    """Gap-sum estimate of the Hilbert transform at the i-th eigenvalue.

    Parameters
    ----------
    l : array_like
        Strictly descending positive eigenvalues.
    i : int
        1-based index into ``l``.

    Returns
    -------
    float
        (1/p) * sum_{j != i} 1 / (l_j - l_i).  Zero for p = 1.

    Notes
    -----
    This is the plug-in the eigenvalue shrinker uses.  It is noisy exactly
    where neighboring eigenvalues nearly collide, which is why tied values
    are rejected outright.
    """
    lv = np.asarray(l, dtype=float)
    p = lv.shape[0]
    if not 1 <= i <= p:
        raise ValueError(f"index must lie in [1, {p}], got {i}")
    if p == 1:
        return 0.0
    gaps = lv[:-1] - lv[1:]
    if np.min(gaps) <= 0.0:
        raise ValueError("eigenvalues must be strictly descending")
    if np.min(gaps) < TIE_GAP:
        raise EigenvalueTieError(f"minimum eigenvalue gap {np.min(gaps):.3e} below {TIE_GAP:.0e}")
    li = lv[i - 1]
    diffs = np.delete(lv, i - 1) - li
    return float(np.sum(1.0 / diffs) / p)


def mp_density(x, model: MPModel):
    """Marchenko-Pastur density sqrt((x - lm)(lp - x)) / (2 pi c x), zero off-support."""
    xv = np.asarray(x, dtype=float)
    lo, hi = model.lambda_minus, model.lambda_plus
    inside = (xv > lo) & (xv < hi)
    out = np.zeros_like(xv)
    xs = xv[inside]
    out[inside] = np.sqrt((xs - lo) * (hi - xs)) / (2.0 * np.pi * model.c * xs)
    if np.ndim(x) == 0:
        return float(out)
    return out


def mp_cdf(x: float, model: MPModel) -> float:
    """Numeric CDF of the MP law via adaptive quadrature.

    The density has square-root edges; substituting x = edge +- t^2 turns
    each edge into a polynomial zero, so quadrature converges fast.  Errors
    above QUAD_TOL raise NumericError.
    """
    lo, hi = model.lambda_minus, model.lambda_plus
    if x <= lo:
        return 0.0
    if x >= hi:
        return 1.0
    mid = 0.5 * (lo + hi)
    if x <= mid:
        # integrate from the left edge with t = sqrt(u - lo)
        val, err = quad(
            lambda t: 2.0 * t * mp_density(lo + t * t, model),
            0.0,
            math.sqrt(x - lo),
            epsabs=QUAD_TOL,
            epsrel=QUAD_TOL,
            limit=200,
        )
        result = val
    else:
        # integrate the complement from the right edge with t = sqrt(hi - u)
        val, err = quad(
            lambda t: 2.0 * t * mp_density(hi - t * t, model),
            0.0,
            math.sqrt(hi - x),
            epsabs=QUAD_TOL,
            epsrel=QUAD_TOL,
            limit=200,
        )
        result = 1.0 - val
    if err > 1e-6:
        raise NumericError(f"MP CDF quadrature error {err:.3e} at x={x}")
    return min(max(result, 0.0), 1.0)


def identity_hilbert(x: float, model: MPModel) -> float:
    """Closed-form Hilbert transform (principal value) for the identity population.

    H(x) = (1 - c - x) / (2 c x) on the support.
    """
    if x == 0.0:
        raise ValueError("Hilbert transform undefined at x = 0")
    return (1.0 - model.c - x) / (2.0 * model.c * x)


def boundary_stieltjes(x: float, model: MPModel) -> complex:
    """Boundary value of the MP Stieltjes transform on the support.

    m(x) = (1 - c - x + i sqrt((x - lm)(lp - x))) / (2 c x).  The real part
    is identity_hilbert, the imaginary part is pi times the density.
    """
    if x == 0.0:
        raise ValueError("boundary transform undefined at x = 0")
    lo, hi = model.lambda_minus, model.lambda_plus
    disc = max((x - lo) * (hi - x), 0.0)
    return complex(1.0 - model.c - x, math.sqrt(disc)) / (2.0 * model.c * x)


def mp_stieltjes(z: complex, model: MPModel) -> complex:
    """MP Stieltjes transform at z in the upper half-plane.

    Solves the quadratic c z m^2 - (1 - c - z) m + 1 = 0 and picks the root
    with positive imaginary part, the only one that is a Stieltjes transform.
    """
    z = complex(z)
    if z.imag <= 0.0:
        raise ValueError(f"argument must lie in the upper half-plane, got {z}")
    c = model.c
    b = 1.0 - c - z
    root = np.sqrt(b * b - 4.0 * c * z)
    m1 = (b + root) / (2.0 * c * z)
    m2 = (b - root) / (2.0 * c * z)
    return m1 if m1.imag > 0.0 else m2


def mp_equation_residual(z: complex, model: MPModel) -> float:
    """Residual of the MP fixed-point equation at z for the point-mass population.

    With H concentrated at 1 the equation reads m = 1 / (1 - c - c z m - z);
    returns |lhs - rhs| for the closed-form m.
    """
    c = model.c
    m = mp_stieltjes(z, model)
    return abs(m - 1.0 / (1.0 - c - c * z * m - z))


def quantile_map(l: float, c: float, hilbert_value: float, eps: float = 1e-10) -> float:
    """Map a sample eigenvalue to its population counterpart.

    gamma = l / (1 - c - c * l * H) where H is the Hilbert transform value at
    l (closed form or plug-in, caller's choice).  Raises when the denominator
    is within ``eps`` of zero.
    """
    den = 1.0 - c - c * l * hilbert_value
    if den <= eps:
        raise NumericError(f"quantile map denominator {den:.3e} at or below guard {eps:.0e}")
    return l / den


def quantile_index(p: int, alpha: float) -> int:
    """Index of the upper-alpha spectral quantile: floor(p (1 - alpha)), clamped to [1, p].

    The small additive guard absorbs binary rounding of decimal levels
    (p=100, alpha=0.05 must give 95, not 94).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    i = int(math.floor(p * (1.0 - alpha) + 1e-9))
    return min(max(i, 1), p)
