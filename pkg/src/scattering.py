"""
Scattering coefficient F(lam), its derivative and asymptotics, the Krein
coefficient and the spectral-shift derivative g(lam).

F is the constant term of the negated resolvent kernel at the diagonal
once the Green singularity is removed; on the homogeneous models it does
not depend on the puncture point.
"""
import math
import logging
import threading
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import CutoffError, DomainError, PoleError
from .models import (
    DUAL_EXPONENT, ModelKind, enumerate_levels, image_norms, image_radius,
    levels_through, minimal_vector_length, smooth_density, smooth_support,
    image_tail_bound,
)
from .numerics import (
    EULER_GAMMA, Tolerance, adaptive_quad, bessel_k0_array, deterministic_sum, ein,
)

logger = logging.getLogger('pseudolap')

FOUR_PI = 4.0 * math.pi
EPS = float(np.finfo(float).eps)

POLE_GUARD = 1e-8
INNER_POLE_GUARD = 1e-13

# heat-kernel split
SPLIT_EXPONENT = 8.0
EIGEN_EXPONENT = 40.0
IMAGE_TOL = Tolerance(abs_tol=1e-15, rel_tol=1e-12, max_iter=200)

# smoothed spectral sums
SMOOTH_FACTOR = 60.0
FIRST_LEVEL_FACTOR = 100.0
SMOOTH_CUTOFF_RATIO = 6.0
SMOOTH_TOL = Tolerance(abs_tol=1e-14, rel_tol=1e-12, max_iter=400)


@dataclass(frozen=True)
class ExtensionParam:
    """Extension angle alpha in [0, pi); alpha = 0 is the Friedrichs extension."""
    alpha: float

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or not 0.0 <= alpha < math.pi:
            raise DomainError(f"alpha must lie in [0, pi), got {alpha}")
        object.__setattr__(self, 'alpha', alpha)

    @classmethod
    def from_degrees(cls, degrees):
        return cls(math.radians(float(degrees)))

    @property
    def friedrichs(self):
        return self.alpha == 0.0

    @property
    def sin(self):
        return math.sin(self.alpha)

    @property
    def cos(self):
        return math.cos(self.alpha)

    @property
    def cot_alpha(self):
        if self.friedrichs:
            return None
        return math.cos(self.alpha) / math.sin(self.alpha)


class ScatterMethod(str, Enum):
    CLOSED_FORM = 'closed_form'
    SPECTRAL_SUM = 'spectral_sum'
    ASYMPTOTIC = 'asymptotic'


@dataclass(frozen=True)
class ScatterEval:
    value: float
    error_bound: float
    method: ScatterMethod
    order: str = None


def kappa(ext):
    """Constant of the flat 2D large-|lam| law: F - cot(alpha) ~ (log|lam| - kappa) / 4 pi."""
    return FOUR_PI * ext.cot_alpha - 2.0 * EULER_GAMMA + math.log(4.0)


# ── closed-form evaluators ──

class _SphereScattering:
    """F = q coth(pi q) / 4 pi, q = sqrt(-lam - 1); s cot(pi s) / 4 pi above -1."""

    def _check_pole(self, lam, guard):
        if lam <= -1.0:
            return
        n = round(math.sqrt(lam + 1.0))
        if n >= 1:
            mu = n * n - 1.0
            if abs(lam - mu) < guard * max(1.0, mu):
                raise PoleError(f"lam={lam} is at the eigenvalue {mu}", pole=mu)

    def value(self, lam, pole_guard=POLE_GUARD):
        self._check_pole(lam, pole_guard)
        u = lam + 1.0
        if abs(u) < 1e-4:
            p2 = math.pi ** 2
            f = (1.0 - p2 * u / 3.0 - p2 ** 2 * u ** 2 / 45.0 - 2.0 * p2 ** 3 * u ** 3 / 945.0) / (FOUR_PI * math.pi)
        elif u < 0:
            q = math.sqrt(-u)
            f = q / (FOUR_PI * math.tanh(math.pi * q))
        else:
            s = math.sqrt(u)
            f = s / (FOUR_PI * math.tan(math.pi * s))
        return f, 4.0 * EPS * (abs(f) + 1.0)

    def derivative(self, lam, pole_guard=POLE_GUARD):
        self._check_pole(lam, pole_guard)
        u = lam + 1.0
        if abs(u) < 1e-4:
            p2 = math.pi ** 2
            df = (-p2 / 3.0 - 2.0 * p2 ** 2 * u / 45.0 - 6.0 * p2 ** 3 * u ** 2 / 945.0) / (FOUR_PI * math.pi)
        elif u < 0:
            q = math.sqrt(-u)
            x = math.pi * q
            tail = x / math.sinh(x) ** 2 if x < 300.0 else 0.0
            df = -(1.0 / math.tanh(x) - tail) / (8.0 * math.pi * q)
        else:
            s = math.sqrt(u)
            x = math.pi * s
            df = (1.0 / math.tan(x) - x / math.sin(x) ** 2) / (8.0 * math.pi * s)
        return df, 4.0 * EPS * (abs(df) + 1.0)


class _TorusScattering:
    """Heat-kernel split of F at time T.

    Small times use the image expansion of the heat kernel, large times the
    eigenvalue expansion; the free part is integrated in closed form. Valid
    for every real lam off the spectrum.
    """

    def __init__(self, model):
        self.model = model
        self.dim = model.dimension
        self.volume = model.volume
        self.lmin = minimal_vector_length(model.basis)
        self.base_split = self.lmin ** 2 / FOUR_PI
        norms = image_norms(model.basis, math.sqrt(4.0 * self.base_split * DUAL_EXPONENT))
        self._norms_sq = norms * norms
        self._lock = threading.Lock()
        self._values = np.zeros(0)
        self._mults = np.zeros(0, dtype=np.int64)
        self._reach = 0.0

    def split_time(self, lam):
        if lam > 0:
            return min(self.base_split, SPLIT_EXPONENT / lam)
        return self.base_split

    def _levels(self, reach):
        with self._lock:
            if reach > self._reach:
                table = enumerate_levels(self.model, max(reach, 2.0 * self._reach))
                self._values, self._mults, self._reach = table.values, table.multiplicities, table.cutoff
            values, mults = self._values, self._mults
        n = int(np.searchsorted(values, reach, side='right'))
        return values[:n], mults[:n]

    def _check_pole(self, values, lam, guard):
        i = int(np.searchsorted(values, lam))
        for j in (i - 1, i):
            if 0 <= j < len(values):
                mu = float(values[j])
                if abs(lam - mu) < guard * max(1.0, mu):
                    raise PoleError(f"lam={lam} is at the eigenvalue {mu}", pole=mu)

    def _image_integral(self, lam, T, power):
        """int_0^T e^{lam t} t^{-power} S(t) dt."""
        if self.lmin ** 2 / (4.0 * T) > DUAL_EXPONENT:
            return 0.0, 0.0
        norms_sq = self._norms_sq

        def integrand(t):
            if t <= 0.0:
                return 0.0
            return math.exp(lam * t) * t ** (-power) * float(np.sum(np.exp(-norms_sq / (4.0 * t))))

        result = adaptive_quad(integrand, 0.0, T, IMAGE_TOL)
        return result.value, result.error_estimate

    def _free(self, lam, T):
        """Free-space part and its lam-derivative."""
        if self.dim == 3:
            pref = FOUR_PI ** -1.5
            root_t = math.sqrt(T)
            if lam < 0:
                a = -lam
                x = math.sqrt(a * T)
                j = 2.0 * math.sqrt(math.pi * a) * special.erf(x) + 2.0 * math.expm1(-a * T) / root_t
                dj = -math.sqrt(math.pi / a) * special.erf(x)
            elif lam > 0:
                x = math.sqrt(lam * T)
                j = -2.0 * math.sqrt(math.pi * lam) * special.erfi(x) + 2.0 * math.expm1(lam * T) / root_t
                dj = -math.sqrt(math.pi / lam) * special.erfi(x)
            else:
                j, dj = 0.0, -2.0 * root_t
            return pref * (2.0 / root_t + j), pref * dj

        value = (-EULER_GAMMA - math.log(T) + ein(-lam * T)) / FOUR_PI \
            + (EULER_GAMMA - math.log(2.0)) / (2.0 * math.pi)
        slope = -math.expm1(lam * T) / (FOUR_PI * lam) if lam != 0 else -T / FOUR_PI
        return value, slope

    def _evaluate(self, lam, derivative, pole_guard):
        lam = float(lam)
        T = self.split_time(lam)
        values, mults = self._levels(max(lam, 0.0) + EIGEN_EXPONENT / T)
        self._check_pole(values, lam, pole_guard)
        gaps = values - lam
        weights = mults * np.exp(-gaps * T)
        pref = FOUR_PI ** -1.5 if self.dim == 3 else 1.0 / FOUR_PI
        free, free_slope = self._free(lam, T)
        # pairwise numpy reduction in table order
        if derivative:
            power = 0.5 if self.dim == 3 else 0.0
            eigen = -float(np.sum(weights * (T / gaps + 1.0 / gaps ** 2))) / self.volume
            image, image_err = self._image_integral(lam, T, power)
            total = free_slope - pref * image + eigen
        else:
            power = 1.5 if self.dim == 3 else 1.0
            eigen = -float(np.sum(weights / gaps)) / self.volume
            image, image_err = self._image_integral(lam, T, power)
            total = free - pref * image + eigen
        bound = pref * image_err + 8.0 * EPS * (abs(total) + abs(eigen) + abs(free))
        return total, bound

    def value(self, lam, pole_guard=POLE_GUARD):
        return self._evaluate(lam, False, pole_guard)

    def derivative(self, lam, pole_guard=POLE_GUARD):
        return self._evaluate(lam, True, pole_guard)


@lru_cache(maxsize=32)
def scattering_function(model):
    """Cached closed-form evaluator exposing value(lam) and derivative(lam)."""
    if model.kind == ModelKind.SPHERE3:
        return _SphereScattering()
    return _TorusScattering(model)


# ── public operations ──

def f_closed(model, lam):
    value, bound = scattering_function(model).value(float(lam))
    return ScatterEval(value, bound, ScatterMethod.CLOSED_FORM)


def f_images(model, lam):
    """F on a torus from the direct lattice image sum (lam < 0)."""
    lam = float(lam)
    if not model.is_torus:
        raise DomainError("image sums are defined for tori only")
    if not lam < 0:
        raise DomainError(f"image sum needs lam < 0, got {lam}")
    k = math.sqrt(-lam)
    radius = image_radius(model, k, target=1e-17)
    r = image_norms(model.basis, radius)
    if model.dimension == 3:
        images = deterministic_sum(np.exp(-k * r) / (FOUR_PI * r))
        value = k / FOUR_PI - images
    else:
        images = deterministic_sum(bessel_k0_array(k * r) / (2.0 * math.pi))
        value = math.log(-lam) / FOUR_PI + (EULER_GAMMA - math.log(2.0)) / (2.0 * math.pi) - images
    bound = image_tail_bound(model, k, radius) + 4.0 * EPS * (abs(value) + abs(images))
    return ScatterEval(value, bound, ScatterMethod.CLOSED_FORM)


def _first_level(model):
    return float(levels_through(model, 1e-9).values[1])


def spectral_cutoff(model, poles):
    """Table cutoff needed by the smoothed spectral sums around the given poles."""
    scale = max(SMOOTH_FACTOR * max(max(abs(p) for p in poles), 1.0),
                FIRST_LEVEL_FACTOR * _first_level(model))
    return SMOOTH_CUTOFF_RATIO * scale


def _weighted_level_sum(model, values, mults, h, scale, lower):
    """sum m h(mu) w(mu) + int rho h (1 - w), w = exp(-(mu/scale)^4)."""
    w = np.exp(-(values / scale) ** 4)
    direct = deterministic_sum(mults * h(values) * w)

    def integrand(mu):
        return float(smooth_density(model, mu)) * h(mu) * -math.expm1(-(mu / scale) ** 4)

    body = adaptive_quad(integrand, lower, 4.0 * scale, SMOOTH_TOL, points=[scale])
    tail = adaptive_quad(integrand, 4.0 * scale, np.inf, SMOOTH_TOL)
    return direct + body.value + tail.value, body.error_estimate + tail.error_estimate


def _sharp_level_sum(model, table, h):
    """Sharp cutoff with the smooth-density tail; conservative boundary term."""
    direct = deterministic_sum(table.multiplicities * h(table.values))
    tail = adaptive_quad(lambda mu: float(smooth_density(model, mu)) * h(mu),
                         table.cutoff, np.inf, SMOOTH_TOL)
    top = int(np.max(table.multiplicities[-10:]))
    boundary = top * abs(float(h(np.array([table.cutoff]))[0]))
    return direct + tail.value, boundary + tail.error_estimate


def smoothed_level_sum(model, table, h, poles):
    """sum_k m_k h(mu_k) over the whole spectrum, with an error estimate.

    The sharp cutoff is replaced by a smooth weight; the part the weight
    removes is restored from the smooth density of states. The estimate
    compares two weight scales.
    """
    if max(poles) >= smooth_support(model):
        logger.debug("pole on the smooth support; using sharp cutoff")
        return _sharp_level_sum(model, table, h)
    lower = smooth_support(model)
    fine = table.cutoff / SMOOTH_CUTOFF_RATIO
    v_fine, e_fine = _weighted_level_sum(model, table.values, table.multiplicities, h, fine, lower)
    v_coarse, e_coarse = _weighted_level_sum(model, table.values, table.multiplicities, h, 0.5 * fine, lower)
    return v_fine, abs(v_fine - v_coarse) + e_fine + e_coarse


def _guard_table(table, lam):
    values = table.values
    i = int(np.searchsorted(values, lam))
    for j in (i - 1, i):
        if 0 <= j < len(values):
            mu = float(values[j])
            if abs(lam - mu) < POLE_GUARD * max(1.0, mu):
                raise PoleError(f"lam={lam} is at the eigenvalue {mu}", pole=mu)


def f_diff_spectral(model, lam, lam0, table=None, tol=None):
    """F(lam) - F(lam0) = (lam0 - lam) / Vol * sum m_k / ((mu_k - lam)(mu_k - lam0))."""
    lam, lam0 = float(lam), float(lam0)
    if lam == lam0:
        return ScatterEval(0.0, 0.0, ScatterMethod.SPECTRAL_SUM)
    if table is None:
        table = enumerate_levels(model, spectral_cutoff(model, [lam, lam0]))
    _guard_table(table, lam)
    _guard_table(table, lam0)

    def h(mu):
        return 1.0 / ((mu - lam) * (mu - lam0))

    total, err = smoothed_level_sum(model, table, h, [lam, lam0])
    scale = (lam0 - lam) / model.volume
    result = ScatterEval(scale * total, abs(scale) * err, ScatterMethod.SPECTRAL_SUM)
    if tol is not None and result.error_bound > tol:
        raise CutoffError(f"cutoff {table.cutoff:.6g} too small: error bound {result.error_bound:.3g} > {tol}")
    return result


def f_prime(model, lam, method='closed', table=None):
    """F'(lam) = -(1/Vol) sum m_k / (mu_k - lam)^2."""
    lam = float(lam)
    if method == 'closed':
        value, bound = scattering_function(model).derivative(lam)
        return ScatterEval(value, bound, ScatterMethod.CLOSED_FORM)
    if method != 'spectral':
        raise DomainError(f"unknown method '{method}'")
    if table is None:
        table = enumerate_levels(model, spectral_cutoff(model, [lam]))
    _guard_table(table, lam)
    total, err = smoothed_level_sum(model, table, lambda mu: 1.0 / (mu - lam) ** 2, [lam])
    return ScatterEval(-total / model.volume, err / model.volume, ScatterMethod.SPECTRAL_SUM)


def _shortest_shell(model):
    """Length of the shortest lattice vectors and how many there are."""
    lmin = minimal_vector_length(model.basis)
    norms = image_norms(model.basis, lmin * (1 + 1e-9))
    return lmin, int(np.sum(norms <= lmin * (1 + 1e-9)))


def f_asymptotic(model, lam):
    """Large negative lam law of F with its order tag."""
    lam = float(lam)
    if lam > -10.0:
        raise DomainError(f"asymptotic law needs lam <= -10, got {lam}")
    a = -lam
    k = math.sqrt(a)
    if model.kind == ModelKind.FLAT_TORUS2:
        value = math.log(a + 1.0) / FOUR_PI + (EULER_GAMMA - math.log(2.0)) / (2.0 * math.pi) \
            - 1.0 / (FOUR_PI * (a + 1.0))
        lmin, shell = _shortest_shell(model)
        images = 2.0 * shell * float(bessel_k0_array(np.array([k * lmin]))[0]) / (2.0 * math.pi)
        bound = 1.0 / (2.0 * math.pi * lam ** 2) + images
        return ScatterEval(value, bound, ScatterMethod.ASYMPTOTIC, 'O(lambda^-2)')
    if model.kind == ModelKind.SPHERE3:
        value = math.sqrt(a - 1.0) / FOUR_PI
        bound = 2.02 * value * math.exp(-2.0 * math.pi * math.sqrt(a - 1.0)) + 4.0 * EPS * value
        return ScatterEval(value, bound, ScatterMethod.ASYMPTOTIC, 'O(|lambda|^-inf)')
    value = k / FOUR_PI
    lmin, shell = _shortest_shell(model)
    bound = 2.0 * shell * math.exp(-k * lmin) / (FOUR_PI * lmin) + 4.0 * EPS * value
    return ScatterEval(value, bound, ScatterMethod.ASYMPTOTIC, 'O(|lambda|^-inf)')


def krein_coefficient(model, lam, ext):
    """k = sin(alpha) / (F sin(alpha) - cos(alpha))."""
    if ext.friedrichs:
        return 0.0
    f = f_closed(model, lam).value
    denom = f * ext.sin - ext.cos
    if abs(denom) < 1e-14 * max(1.0, abs(f)):
        raise PoleError(f"lam={lam} is an eigenvalue of the pseudo-Laplacian", pole=float(lam))
    return ext.sin / denom


def shift_derivative(model, lam, ext):
    """g(lam) = F' sin(alpha) / (cos(alpha) - F sin(alpha)) = -F' / (F - cot(alpha))."""
    if ext.friedrichs:
        logger.debug("shift derivative requested for the Friedrichs extension: identically 0")
        return 0.0
    evaluator = scattering_function(model)
    f, _ = evaluator.value(float(lam))
    df, _ = evaluator.derivative(float(lam))
    denom = ext.cos - f * ext.sin
    if abs(denom) < 1e-14 * max(1.0, abs(f)):
        raise PoleError(f"lam={lam} is an eigenvalue of the pseudo-Laplacian", pole=float(lam))
    return df * ext.sin / denom


def mean_spectral_shift(model, ext, energy):
    """Average share of a spectral gap lying between its secular root and the level above.

    From the smoothed scattering coefficient F(E + i0) = F_bg(E) - i I(E):
    1/2 + arctan((cot(alpha) - F_bg) / I) / pi.
    """
    energy = np.asarray(energy, dtype=float)
    if ext.friedrichs:
        return np.zeros_like(energy)
    c = ext.cot_alpha
    if model.kind == ModelKind.FLAT_TORUS2:
        y = (kappa(ext) - np.log(energy)) / math.pi
    elif model.kind == ModelKind.SPHERE3:
        y = FOUR_PI * c / np.sqrt(energy + 1.0)
    else:
        y = FOUR_PI * c / np.sqrt(energy)
    return 0.5 + np.arctan(y) / math.pi
