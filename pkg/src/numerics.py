"""
Numerics: special functions, quadrature, root bracketing and summation
used by the spectral modules.
"""
import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from config import Config
from .errors import ConvergenceError, DomainError

logger = logging.getLogger('pseudolap')

EULER_GAMMA = float(np.euler_gamma)

# exp(-x) underflows to zero in double precision beyond this
UNDERFLOW_ARG = 745.0


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = Config.ABS_TOL
    rel_tol: float = Config.REL_TOL
    max_iter: int = Config.MAX_ITER

    def __post_init__(self):
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise DomainError("tolerances must be non-negative")
        if self.abs_tol == 0 and self.rel_tol == 0:
            raise DomainError("at least one of abs_tol, rel_tol must be positive")
        if int(self.max_iter) < 1:
            raise DomainError("max_iter must be >= 1")


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


def bessel_k0(x):
    """Modified Bessel function of the second kind, order zero."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"bessel_k0 requires x > 0, got {x}")
    if x > UNDERFLOW_ARG:
        return 0.0
    return float(special.k0(x))


def bessel_k0_array(x):
    """Vectorised K0 for positive arrays, zero past underflow."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    live = x <= UNDERFLOW_ARG
    out[live] = special.k0(x[live])
    return out


def ein(z):
    """Entire exponential integral Ein(z) = int_0^z (1 - e^{-t}) / t dt."""
    z = float(z)
    if abs(z) < 1.0:
        # sum_k (-1)^{k+1} z^k / (k k!)
        term = total = z
        for k in range(2, 40):
            term *= -z / k
            total += term / k
            if abs(term) < 1e-18 * abs(total):
                break
        return total
    if z > 0:
        return float(special.exp1(z)) + EULER_GAMMA + math.log(z)
    return EULER_GAMMA + math.log(-z) - float(special.expi(-z))


def adaptive_quad(func, lo, hi, tol=None, points=None):
    """Adaptive Gauss-Kronrod quadrature (QUADPACK) with an error budget.

    Raises ConvergenceError when the reported error is far beyond what
    was requested or the value is not finite.
    """
    tol = tol or Tolerance()
    kwargs = dict(epsabs=tol.abs_tol, epsrel=tol.rel_tol, limit=int(tol.max_iter), full_output=1)
    if points is not None and np.isfinite(lo) and np.isfinite(hi):
        inside = [p for p in points if lo < p < hi]
        if inside:
            kwargs['points'] = inside
    result = integrate.quad(func, lo, hi, **kwargs)
    value, error, info = result[0], result[1], result[2]
    if len(result) > 3:
        logger.debug(f"quad on [{lo}, {hi}] reported: {result[3]}")
    budget = max(1e4 * tol.abs_tol, 1e4 * tol.rel_tol * abs(value))
    if not np.isfinite(value) or error > budget:
        raise ConvergenceError(
            f"quadrature on [{lo}, {hi}] did not converge: value={value}, error={error}"
        )
    return QuadResult(value=float(value), error_estimate=float(error), evaluations=int(info['neval']))


def heat_integral_identity_check(d, lam, tol=None):
    """Quadrature of int_0^inf e^{lam t} t^{-3/2} e^{-d^2/4t} dt.

    Closed form: (2 sqrt(pi) / d) exp(-d sqrt(-lam)).
    """
    if not d > 0:
        raise DomainError(f"distance must be positive, got {d}")
    if not lam < 0:
        raise DomainError(f"lam must be negative, got {lam}")
    tol = tol or Tolerance()

    # t = e^u; the integrand peaks near t ~ d / (2 sqrt(-lam))
    def integrand(u):
        if abs(u) > 700.0:
            return 0.0
        t = math.exp(u)
        return math.exp(lam * t - 0.5 * u - d * d / (4.0 * t))

    centre = math.log(d / (2.0 * math.sqrt(-lam)))
    left = adaptive_quad(integrand, -np.inf, centre, tol)
    right = adaptive_quad(integrand, centre, np.inf, tol)
    return QuadResult(
        value=left.value + right.value,
        error_estimate=left.error_estimate + right.error_estimate,
        evaluations=left.evaluations + right.evaluations,
    )


def bracketed_root(f, lo, hi, tol=None):
    """Brent's method on a sign-changing bracket [lo, hi]."""
    tol = tol or Tolerance()
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise DomainError(f"invalid bracket [{lo}, {hi}]")
    f_lo, f_hi = f(lo), f(hi)
    if not f_lo * f_hi < 0:
        raise DomainError(f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")
    try:
        root, info = optimize.brentq(
            f, lo, hi,
            xtol=max(tol.abs_tol, 1e-300),
            rtol=max(tol.rel_tol, 4 * np.finfo(float).eps),
            maxiter=int(tol.max_iter),
            full_output=True,
        )
    except RuntimeError as e:
        raise ConvergenceError(f"root search on [{lo}, {hi}] failed: {e}") from e
    if not info.converged:
        raise ConvergenceError(f"root search on [{lo}, {hi}] exceeded {tol.max_iter} iterations")
    return float(root)


def deterministic_sum(terms):
    """Exactly rounded sum (Shewchuk); independent of term order."""
    if isinstance(terms, np.ndarray):
        terms = terms.ravel().tolist()
    return math.fsum(terms)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of comparing two independently computed quantities."""
    name: str
    lhs: float
    rhs: float
    abs_diff: float
    tol: float
    bound: float
    passed: bool
    detail: str = ''

    def to_dict(self):
        return {
            'name': self.name,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'abs_diff': self.abs_diff,
            'tol': self.tol,
            'bound': self.bound,
            'pass': self.passed,
            'detail': self.detail,
        }


def agreement(name, lhs, rhs, tol, bound=0.0, detail=''):
    """Pass when |lhs - rhs| <= max(tol, bound)."""
    lhs, rhs = float(lhs), float(rhs)
    diff = abs(lhs - rhs)
    passed = bool(np.isfinite(diff) and diff <= max(float(tol), float(bound)))
    if not passed:
        logger.warning(f"check '{name}' failed: |{lhs!r} - {rhs!r}| = {diff:.3g} > max({tol}, {bound:.3g})")
    return CheckResult(name, lhs, rhs, diff, float(tol), float(bound), passed, detail)
