"""
Zeta-regularized determinants.

det(Delta - lam_tilde) and det*(Delta) come from a Mellin transform of the
heat trace split at t = T: below T the closed leading term is integrated
analytically and the exponentially small dual remainder numerically, above
T the eigenvalue sum gives exponential integrals. Pseudo-Laplacian
determinants follow from the comparison formulas, and the relative zeta
derivative is also rebuilt independently from integrals of g(lam).
"""
import math
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from config import Config
from .errors import DomainError, FriedrichsError
from .models import (
    ModelKind, enumerate_levels, heat_trace_dual_remainder,
)
from .numerics import EULER_GAMMA, Tolerance, adaptive_quad, agreement, deterministic_sum
from .pseudospectrum import negative_root
from .scattering import FOUR_PI, f_closed, kappa, scattering_function, shift_derivative

logger = logging.getLogger('pseudolap')

EIGEN_EXPONENT = 40.0
SERIES_TERMS = 80
ZETA_TOL = Tolerance(abs_tol=1e-13, rel_tol=1e-11, max_iter=400)
SHIFT_TOL = Tolerance(abs_tol=1e-12, rel_tol=1e-10, max_iter=400)
TAIL_TARGET = 1e-10
EPS = float(np.finfo(float).eps)
LIMIT_STEP_RATIO = 50.0


@dataclass(frozen=True)
class SignedLogDet:
    """A determinant as sign * exp(log_abs)."""
    sign: int
    log_abs: float
    error_bound: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise DomainError(f"sign must be -1 or +1, got {self.sign}")
        if not math.isfinite(self.log_abs):
            raise DomainError("log_abs must be finite")

    @property
    def value(self):
        return self.sign * math.exp(self.log_abs)

    def to_dict(self):
        return {'sign': self.sign, 'log_abs': self.log_abs}


@dataclass(frozen=True)
class RelativeZetaParams:
    """Cut parameter C and quadrature settings; cutoff feeds the paired spectral sums."""
    C: float = None
    tol: Tolerance = field(default_factory=lambda: SHIFT_TOL)
    cutoff: float = None

    def __post_init__(self):
        if self.C is not None and not float(self.C) >= 10.0:
            raise DomainError(f"C must be at least 10, got {self.C}")
        if self.cutoff is not None and not float(self.cutoff) > 0:
            raise DomainError(f"cutoff must be positive, got {self.cutoff}")


@dataclass(frozen=True)
class RelativeZetaResult:
    """D = zeta'(0, Delta_alpha - lam_tilde) - zeta'(0, Delta - lam_tilde) from integrals of g."""
    value: float
    error_estimate: float
    closed: float
    fitted_constant: float
    C: float

    def to_dict(self):
        return {
            'D': self.value,
            'error_estimate': self.error_estimate,
            'closed': self.closed,
            'fitted_constant': self.fitted_constant,
            'C': self.C,
        }


# ── Mellin pieces ──

def _leading_coefficient(model):
    return model.volume / (4.0 * math.pi) ** (model.dimension / 2)


def _leading_shift(model):
    """The leading heat term is c t^{-d/2} e^{shift t}."""
    return 1.0 if model.kind == ModelKind.SPHERE3 else 0.0


def _leading_series(c, d, beta, T):
    """d/ds at 0 of (1/Gamma(s)) int_0^T c t^{s-d/2-1} e^{beta t} dt, termwise."""
    half = d / 2
    total = 0.0
    power = 1.0
    for j in range(SERIES_TERMS):
        if j > 0:
            power *= beta * T / j
        if 2 * j == d:
            total += c * beta * (EULER_GAMMA + math.log(T))
            continue
        term = c * power * T ** (-half) / (j - half)
        total += term
        if j > beta * T + 2 and abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def _leading_closed(c, d, a, T):
    """Same quantity for beta = -a < 0: full Mellin transform minus its tail beyond T."""
    if d == 3:
        full = c * (4.0 * math.sqrt(math.pi) / 3.0) * a ** 1.5
        root_t = math.sqrt(T)
        inner = 2.0 * math.exp(-a * T) / root_t - 2.0 * math.sqrt(math.pi * a) * special.erfc(math.sqrt(a * T))
        tail = c * ((2.0 / 3.0) * T ** -1.5 * math.exp(-a * T) - (2.0 * a / 3.0) * inner)
    else:
        full = c * a * (math.log(a) - 1.0)
        tail = c * (math.exp(-a * T) / T - a * float(special.exp1(a * T)))
    return full - tail


def _leading_part(model, beta, T):
    c = _leading_coefficient(model)
    if beta >= 0:
        return _leading_series(c, model.dimension, beta, T)
    return _leading_closed(c, model.dimension, -beta, T)


def _remainder_part(model, lam_tilde, T):
    """int_0^T e^{lam_tilde t} (Theta - leading)(t) / t dt."""

    def integrand(t):
        if t <= 0.0:
            return 0.0
        return math.exp(lam_tilde * t) * heat_trace_dual_remainder(model, t) / t

    return adaptive_quad(integrand, 0.0, T, ZETA_TOL)


def _eigen_part(model, lam_tilde, T, positive_only=False):
    """sum_k m_k E1((mu_k - lam_tilde) T) over the levels that matter."""
    table = enumerate_levels(model, max(lam_tilde + EIGEN_EXPONENT / T, 1.0))
    values, mults = table.values, table.multiplicities
    if positive_only:
        values, mults = values[1:], mults[1:]
    return deterministic_sum(mults * special.exp1((values - lam_tilde) * T))


def _check_split(split):
    split = float(split)
    if not split > 0:
        raise DomainError(f"Mellin split must be positive, got {split}")
    return split


def zeta_prime_unperturbed(model, lam_tilde, split=None):
    """zeta'(0, Delta - lam_tilde) and a quadrature error estimate."""
    lam_tilde = float(lam_tilde)
    if not lam_tilde < 0:
        raise DomainError(f"lam_tilde must be negative, got {lam_tilde}")
    T = _check_split(Config.MELLIN_SPLIT if split is None else split)
    lead = _leading_part(model, lam_tilde + _leading_shift(model), T)
    rem = _remainder_part(model, lam_tilde, T)
    eigen = _eigen_part(model, lam_tilde, T)
    value = lead + rem.value + eigen
    bound = rem.error_estimate + 16.0 * EPS * (abs(lead) + abs(eigen) + 1.0)
    logger.debug(f"zeta'(0) {model.name} lam_tilde={lam_tilde}: lead={lead!r} rem={rem.value!r} eigen={eigen!r}")
    return value, bound


def logdet_unperturbed(model, lam_tilde, split=None):
    """log det(Delta - lam_tilde) = -zeta'(0, Delta - lam_tilde); the determinant is positive."""
    value, bound = zeta_prime_unperturbed(model, lam_tilde, split)
    return SignedLogDet(1, -value, bound)


def logdet_star(model, split=None):
    """Determinant with the zero mode removed: Theta(t) - 1 in the Mellin integrand."""
    T = _check_split(Config.MELLIN_SPLIT if split is None else split)
    lead = _leading_part(model, _leading_shift(model), T)
    zero_mode = -(EULER_GAMMA + math.log(T))
    rem = _remainder_part(model, 0.0, T)
    eigen = _eigen_part(model, 0.0, T, positive_only=True)
    value = lead + zero_mode + rem.value + eigen
    bound = rem.error_estimate + 16.0 * EPS * (abs(lead) + abs(eigen) + 1.0)
    return SignedLogDet(1, -value, bound)


def logdet_star_crosscheck(model, split=None, tol=1e-8):
    """log det* at two split points; the split is arbitrary so the values must agree."""
    T = _check_split(Config.MELLIN_SPLIT if split is None else split)
    first = logdet_star(model, T)
    second = logdet_star(model, T / 4.0)
    return agreement(
        'logdet_star_split', first.log_abs, second.log_abs, tol,
        first.error_bound + second.error_bound, f"splits {T} and {T / 4.0}",
    )


# ── pseudo-Laplacian determinants ──

def _comparison_prefactor(model):
    """4 pi, times e^gamma in two dimensions."""
    return FOUR_PI * (math.exp(EULER_GAMMA) if model.dimension == 2 else 1.0)


def logdet_pseudo_theorem(model, ext, lam_tilde, split=None):
    """det(Delta_alpha - lam_tilde) = 4 pi [e^gamma] (F(lam_tilde) - cot(alpha)) det(Delta - lam_tilde)."""
    base = logdet_unperturbed(model, lam_tilde, split)
    if ext.friedrichs:
        return base
    f = f_closed(model, lam_tilde)
    gap = f.value - ext.cot_alpha
    if gap == 0.0:
        raise DomainError(f"lam_tilde={lam_tilde} is an eigenvalue of the pseudo-Laplacian")
    sign = 1 if gap > 0 else -1
    log_abs = math.log(_comparison_prefactor(model) * abs(gap)) + base.log_abs
    return SignedLogDet(sign, log_abs, base.error_bound + f.error_bound / abs(gap))


def logdet_pseudo_at_zero(model, ext, split=None):
    """det Delta_alpha = -4 pi [e^gamma] det* Delta / Vol, independent of alpha."""
    if ext.friedrichs:
        raise FriedrichsError("the corollary needs alpha != 0")
    star = logdet_star(model, split)
    log_abs = math.log(_comparison_prefactor(model)) - math.log(model.volume) + star.log_abs
    return SignedLogDet(-1, log_abs, star.error_bound)


@dataclass(frozen=True)
class LimitPath(SignedLogDet):
    """Extrapolated determinant together with the lam_tilde the path started from."""
    lam_tilde: float = math.nan

    def to_dict(self):
        return {**super().to_dict(), 'lambda_tilde': self.lam_tilde}


def corollary_limit_path(model, ext, lam_tilde=-1e-3, split=None):
    """lam_tilde -> 0- limit of the comparison formula.

    log|det| is analytic at 0 with radius |nu_0|, so the start is pulled in to
    |nu_0| / 50 when needed; two Richardson steps over lam_tilde, lam_tilde / 2
    and lam_tilde / 4 then leave an O((lam_tilde / nu_0)^3) error.
    """
    lam_tilde = float(lam_tilde)
    if not lam_tilde < 0:
        raise DomainError(f"lam_tilde must be negative, got {lam_tilde}")
    if not ext.friedrichs:
        nu0 = negative_root(model, ext).value
        limit = abs(nu0) / LIMIT_STEP_RATIO
        if -lam_tilde > limit:
            logger.debug(f"{model.name}: lam_tilde {lam_tilde} moved to {-limit!r} (nu_0={nu0!r})")
            lam_tilde = -limit
    dets = [logdet_pseudo_theorem(model, ext, lam_tilde / 2 ** k, split) for k in range(3)]
    if len({d.sign for d in dets}) != 1:
        raise DomainError(f"lam_tilde={lam_tilde} is not between the negative eigenvalue and 0")
    coarse = 2.0 * dets[1].log_abs - dets[0].log_abs
    fine = 2.0 * dets[2].log_abs - dets[1].log_abs
    log_abs = (4.0 * fine - coarse) / 3.0
    error = (8.0 * dets[2].error_bound + 6.0 * dets[1].error_bound + dets[0].error_bound) / 3.0
    return LimitPath(dets[0].sign, log_abs, error, lam_tilde)


# ── relative zeta derivative from g ──

def auto_cut(model, ext, lam_tilde, C=None):
    """Cut parameter C: at least 4 |lam_tilde|, and in 2D far enough past e^kappa."""
    C = Config.DEFAULT_C if C is None else float(C)
    cut = max(C, 4.0 * abs(lam_tilde))
    if model.dimension == 2:
        cut = max(cut, math.exp(kappa(ext) + 4.0))
    return cut


def _shift_integrand(model, ext, subtract):
    """u -> (g(lam) - subtract(lam)) |lam| at lam = -e^u."""

    def integrand(u):
        lam = -math.exp(u)
        return (shift_derivative(model, lam, ext) - subtract(lam)) * -lam

    return integrand


def relative_zeta_prime_numeric(model, ext, lam_tilde, params=None):
    """D(lam_tilde) assembled from integrals of g below lam_tilde.

    3D: D = int_{-C}^{lam_tilde} g + int_{-inf}^{-C} (g + 1/(2 lam)) - log(C) / 2.
    2D: the subtraction is 1/(|lam| (log|lam| - kappa)) and the constant
    -gamma - log(log C - kappa).
    """
    if ext.friedrichs:
        raise FriedrichsError("no relative zeta function for alpha = 0")
    params = params or RelativeZetaParams()
    lam_tilde = float(lam_tilde)
    nu0 = negative_root(model, ext).value
    if not lam_tilde < nu0:
        raise DomainError(f"lam_tilde={lam_tilde} must lie below the negative eigenvalue {nu0}")
    C = auto_cut(model, ext, lam_tilde, params.C)
    log_c = math.log(C)
    c = ext.cot_alpha

    if model.dimension == 3:
        def subtract(lam):
            return -1.0 / (2.0 * lam)
        K = 2.0 * math.pi * abs(c) + 1.0
        u_max = 2.0 * math.log(2.0 * K / TAIL_TARGET)
        u_top = max(u_max, log_c + 1.0)
        # beyond u_top the integrand is 2 pi c e^{-u/2} up to O(e^{-u})
        tail = 4.0 * math.pi * c * math.exp(-0.5 * u_top)
        tail_error = 4.0 * K * K * math.exp(-u_top)
        constant = -0.5 * log_c
    else:
        k2 = kappa(ext)
        if not log_c > k2 + 1.0:
            raise DomainError(f"C={C} too small: need log C > kappa + 1 = {k2 + 1.0}")

        def subtract(lam):
            a = -lam
            return 1.0 / (a * (math.log(a) - k2))
        u_top = log_c + EIGEN_EXPONENT
        tail, tail_error = 0.0, TAIL_TARGET
        constant = -EULER_GAMMA - math.log(log_c - k2)

    inner = adaptive_quad(_shift_integrand(model, ext, lambda lam: 0.0),
                          math.log(-lam_tilde), log_c, params.tol)
    outer = adaptive_quad(_shift_integrand(model, ext, subtract), log_c, u_top, params.tol)
    D = inner.value + outer.value + tail + constant

    f = scattering_function(model).value(lam_tilde)[0]
    closed = math.log(FOUR_PI * (f - c))
    fitted = -D - closed
    error = inner.error_estimate + outer.error_estimate + tail_error
    logger.debug(f"relative zeta {model.name} alpha={ext.alpha} lam_tilde={lam_tilde}: "
                 f"D={D!r} C={C:.6g} fitted constant={fitted!r}")
    return RelativeZetaResult(D, error, closed, fitted, C)


def expected_constant(model):
    """Additive constant separating -D from log(4 pi (F - cot alpha)): gamma in 2D, 0 in 3D."""
    return EULER_GAMMA if model.dimension == 2 else 0.0
