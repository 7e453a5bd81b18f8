"""
Pseudo-spectrum: eigenvalues of the pseudo-Laplacian from the secular
equation F(lam) = cot(alpha), interlacing checks, the Krein resolvent and
the paired sums behind the trace and determinant-ratio identities.
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from config import Config
from .errors import ConvergenceError, CutoffError, DomainError, FriedrichsError, PoleError
from .models import enumerate_levels, levels_through, resolvent_kernel
from .numerics import Tolerance, adaptive_quad, agreement, bracketed_root, deterministic_sum
from .scattering import (
    FOUR_PI, INNER_POLE_GUARD, POLE_GUARD, krein_coefficient, kappa,
    mean_spectral_shift, scattering_function, shift_derivative,
)

logger = logging.getLogger('pseudolap')

ROOT_TOL = Tolerance(abs_tol=2.5e-11, rel_tol=2.5e-11, max_iter=200)
ROOT_ACCURACY = 1e-10
GAP_OFFSET = 1e-9
SHRINK_STEPS = 3
NEGATIVE_HI = -1e-7
TAIL_TOL = Tolerance(abs_tol=1e-14, rel_tol=1e-10, max_iter=400)
# distinct gaps averaged for the tail fluctuation estimate
TAIL_WINDOW = 50


@dataclass(frozen=True)
class SecularRoot:
    value: float
    source_level: int
    residual: float


@dataclass(frozen=True)
class PseudoSpectrum:
    """Secular roots up to the cutoff plus the old levels that survive at reduced multiplicity.

    roots[0] is the negative root; roots[j] (j >= 1) lies in (mu_{j-1}, mu_j).
    upper_level is the first distinct level above the cutoff.
    """
    model: object
    ext: object
    roots: tuple
    retained: tuple
    cutoff: float
    upper_level: float
    negative_count: int = 1

    @property
    def values(self):
        return np.array([r.value for r in self.roots])

    def to_records(self):
        levels = enumerate_levels(self.model, self.upper_level).values
        records = []
        for root in self.roots:
            source = None if root.source_level < 0 else float(levels[root.source_level])
            records.append({'nu': root.value, 'source_mu': source, 'residual': root.residual})
        return records

    def to_dict(self):
        return {
            'model': self.model.name,
            'alpha': self.ext.alpha,
            'cutoff': self.cutoff,
            'upper_level': self.upper_level,
            'roots': self.to_records(),
            'retained': [[mu, m] for mu, m in self.retained],
        }


@dataclass(frozen=True)
class PairedSum:
    """A convergent root/level pairing sum: partial part, smoothed tail and error estimate."""
    value: float
    error_bound: float
    partial: float
    tail: float
    cutoff: float
    sign: int = 1


def _require_extension(ext):
    if ext.friedrichs:
        raise FriedrichsError("alpha = 0 is the Friedrichs extension; it has no secular equation")


def _secular_function(model, ext):
    evaluator = scattering_function(model)
    c = ext.cot_alpha

    def phi(lam):
        return evaluator.value(lam, INNER_POLE_GUARD)[0] - c

    return phi


def _root_residual(model, ext, root, source_level):
    evaluator = scattering_function(model)
    c = ext.cot_alpha
    residual = abs(evaluator.value(root, INNER_POLE_GUARD)[0] - c)
    slope = abs(evaluator.derivative(root, INNER_POLE_GUARD)[0])
    allowed = 100.0 * slope * ROOT_ACCURACY * max(1.0, abs(root)) + 1e-9 * max(1.0, abs(c))
    if not residual <= allowed:
        raise ConvergenceError(
            f"secular root {root!r} (level {source_level}) has residual {residual:.3g} > {allowed:.3g}"
        )
    return SecularRoot(float(root), source_level, float(residual))


def negative_bracket_limit(model, ext):
    """How far left the negative-root bracket may expand."""
    c = ext.cot_alpha
    limit = 1e6 * max(1.0, (FOUR_PI * c) ** 2)
    if model.dimension == 2:
        limit = max(limit, 1e3 * math.exp(min(kappa(ext), 700.0)))
    return limit


def negative_root(model, ext, tol=None):
    """The unique negative eigenvalue nu_0 of the pseudo-Laplacian."""
    _require_extension(ext)
    tol = tol or ROOT_TOL
    phi = _secular_function(model, ext)
    limit = negative_bracket_limit(model, ext)

    hi = NEGATIVE_HI
    while not phi(hi) < 0:
        hi *= 0.1
        if hi > -1e-15:
            raise ConvergenceError(f"F stays above cot(alpha) = {ext.cot_alpha} up to 0")

    lo = -4.0 * max(1.0, (FOUR_PI * ext.cot_alpha) ** 2)
    while not phi(lo) > 0:
        hi = lo
        lo *= 4.0
        if -lo > limit:
            raise ConvergenceError(
                f"negative root bracket exceeded {limit:.3g} for alpha={ext.alpha}"
            )
    root = bracketed_root(phi, lo, hi, tol)
    logger.debug(f"negative root {root!r} bracketed in [{lo:.6g}, {hi:.6g}]")
    return _root_residual(model, ext, root, -1)


def _gap_root(model, ext, lower, upper, index, tol):
    """Root of F - cot(alpha) in (lower, upper); F runs from +inf to -inf across the gap."""
    phi = _secular_function(model, ext)
    d_lo = GAP_OFFSET * max(1.0, lower)
    d_hi = GAP_OFFSET * max(1.0, upper)
    for _ in range(SHRINK_STEPS + 1):
        lo, hi = lower + d_lo, upper - d_hi
        if phi(lo) > 0 > phi(hi):
            break
        d_lo *= 0.1
        d_hi *= 0.1
    else:
        raise ConvergenceError(f"no sign change of F - cot(alpha) in the gap ({lower}, {upper})")
    root = bracketed_root(phi, lo, hi, tol)
    return _root_residual(model, ext, root, index)


def secular_roots(model, ext, cutoff, tol=None, workers=None):
    """Roots of cot(alpha) = F(lam): the negative one and one per gap whose lower end is <= cutoff."""
    _require_extension(ext)
    cutoff = float(cutoff)
    if not cutoff > 0:
        raise DomainError(f"cutoff must be positive, got {cutoff}")
    tol = tol or ROOT_TOL
    workers = Config.WORKERS if workers is None else int(workers)
    if workers < 1:
        raise DomainError(f"workers must be >= 1, got {workers}")

    table = levels_through(model, cutoff)
    values, mults = table.values, table.multiplicities
    gaps = [(float(values[j]), float(values[j + 1]), j) for j in range(len(values) - 1)]
    logger.debug(f"{model.name}: solving {len(gaps)} gaps up to {cutoff:.6g} with {workers} worker(s)")

    def solve(gap):
        return _gap_root(model, ext, gap[0], gap[1], gap[2], tol)

    if workers > 1 and len(gaps) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(solve, gaps))
    else:
        found = [solve(gap) for gap in gaps]

    roots = [negative_root(model, ext, tol)] + sorted(found, key=lambda r: r.value)
    retained = tuple((float(v), int(m) - 1) for v, m in zip(values[:-1], mults[:-1]) if m >= 2)
    ps = PseudoSpectrum(
        model=model, ext=ext, roots=tuple(roots), retained=retained,
        cutoff=cutoff, upper_level=float(values[-1]),
    )
    for finding in check_interlacing(ps):
        logger.warning(finding)
    return ps


def negative_root_count(model, ext, samples=400):
    """Sign changes of F - cot(alpha) on (-limit, 0) over a logarithmic grid.

    One is expected; other counts are logged as findings.
    """
    _require_extension(ext)
    phi = _secular_function(model, ext)
    limit = negative_bracket_limit(model, ext)
    grid = -np.logspace(math.log10(-NEGATIVE_HI), math.log10(limit), int(samples))
    signs = np.sign([phi(float(lam)) for lam in grid])
    count = int(np.count_nonzero(signs[1:] != signs[:-1]))
    if count != 1:
        logger.warning(f"{model.name}, alpha={ext.alpha}: {count} negative eigenvalues found, expected 1")
    return count


def check_interlacing(ps):
    """Violations of nu_0 < 0 = mu_0 < nu_1 < mu_1 < ...; empty when the spectrum is well formed."""
    findings = []
    levels = enumerate_levels(ps.model, ps.upper_level).values
    if not ps.roots or ps.roots[0].source_level != -1:
        return ["missing negative root"]
    if not ps.roots[0].value < 0:
        findings.append(f"negative root {ps.roots[0].value} is not negative")
    values = ps.values
    if np.any(values == 0.0):
        findings.append("0 is in the pseudo-spectrum")
    if np.any(np.diff(values) <= 0):
        findings.append("roots are not strictly increasing")
    for root in ps.roots[1:]:
        j = root.source_level
        if not levels[j] < root.value < levels[j + 1]:
            findings.append(f"root {root.value} outside its gap ({levels[j]}, {levels[j + 1]})")
    return findings


def _paired_arrays(model, ps, lam):
    """Levels mu_0..mu_top and the roots just below each of them."""
    mu = enumerate_levels(model, ps.upper_level).values
    nu = ps.values
    if len(nu) != len(mu):
        raise DomainError("pseudo-spectrum does not match the level table")
    for label, arr in (('eigenvalue', mu), ('secular root', nu)):
        near = float(arr[np.argmin(np.abs(arr - lam))])
        if abs(lam - near) < POLE_GUARD * max(1.0, abs(near)):
            raise PoleError(f"lam={lam} is at the {label} {near}", pole=near)
    if not lam < mu[-1]:
        raise CutoffError(f"cutoff {ps.cutoff} must lie above lam={lam}")
    return mu, nu


def _fluctuation_bound(mu, kernel_sq_integral, kernel_top):
    """Spread of the per-gap shifts about their mean, beyond the table."""
    window = mu[-(TAIL_WINDOW + 1):]
    g_bar = float(np.mean(np.diff(window))) if len(window) > 1 else float(mu[-1])
    return 3.0 * math.sqrt(g_bar * kernel_sq_integral) + g_bar * kernel_top, g_bar


def _root_error(nu, weights):
    scale = ROOT_ACCURACY * np.maximum(1.0, np.abs(nu))
    return float(np.sum(scale * np.abs(weights)))


def trace_difference(model, ext, lam, cutoff, ps=None):
    """Tr((Delta_alpha - lam)^{-1} - (Delta - lam)^{-1}) as sum_j [1/(nu_j - lam) - 1/(mu_j - lam)]."""
    lam, cutoff = float(lam), float(cutoff)
    if ext.friedrichs:
        return PairedSum(0.0, 0.0, 0.0, 0.0, cutoff)
    ps = ps or secular_roots(model, ext, cutoff)
    mu, nu = _paired_arrays(model, ps, lam)

    terms = (mu - nu) / ((nu - lam) * (mu - lam))
    partial = deterministic_sum(terms)

    top = float(mu[-1])
    tail = adaptive_quad(
        lambda e: float(mean_spectral_shift(model, ext, e)) / (e - lam) ** 2,
        top, np.inf, TAIL_TOL,
    )
    fluctuation, g_bar = _fluctuation_bound(mu, 1.0 / (3.0 * (top - lam) ** 3), 1.0 / (top - lam) ** 2)
    bound = (fluctuation + tail.error_estimate + _root_error(nu, 1.0 / (nu - lam) ** 2)
             + 8.0 * np.finfo(float).eps * float(np.sum(np.abs(terms))))
    logger.debug(f"trace difference at lam={lam}: partial={partial!r} tail={tail.value!r} mean gap={g_bar:.4g}")
    return PairedSum(partial + tail.value, bound, partial, tail.value, cutoff)


def verify_trace_identity(model, ext, lam, cutoff, tol=1e-6, ps=None):
    """Paired eigenvalue sum against the spectral-shift derivative g(lam)."""
    lhs = trace_difference(model, ext, lam, cutoff, ps)
    rhs = shift_derivative(model, lam, ext)
    detail = f"trace bound {lhs.error_bound:.3g}, partial {lhs.partial!r}, tail {lhs.tail!r}"
    return agreement('trace_identity', lhs.value, rhs, tol, lhs.error_bound, detail)


def krein_resolvent(model, ext, d_xy, d_xP, d_Py, lam):
    """R_alpha(x, y) = R(x, y) + k(lam) R(x, P) R(P, y)."""
    base = resolvent_kernel(model, d_xy, lam)
    if ext.friedrichs:
        return base
    k = krein_coefficient(model, lam, ext)
    return base + k * resolvent_kernel(model, d_xP, lam) * resolvent_kernel(model, d_Py, lam)


def _signed_logs(nu, mu, a):
    """sign and log|.| of (nu - a) / (mu - a), elementwise."""
    x = (nu - mu) / (mu - a)
    ratio = 1.0 + x
    signs = np.sign(ratio)
    logs = np.where(ratio > 0, np.log1p(np.where(ratio > 0, x, 0.0)), np.log(np.abs(ratio)))
    return signs, logs


def spectral_log_ratio(model, ext, a, b, cutoff, ps=None):
    """Log of prod_j [(nu_j - a)/(mu_j - a)] / [(nu_j - b)/(mu_j - b)] with its sign.

    Equals the ratio (cot(alpha) - F(a)) / (cot(alpha) - F(b)) of determinant
    quotients; the pairing is the same as in trace_difference.
    """
    a, b, cutoff = float(a), float(b), float(cutoff)
    if ext.friedrichs or a == b:
        return PairedSum(0.0, 0.0, 0.0, 0.0, cutoff)
    ps = ps or secular_roots(model, ext, cutoff)
    mu, nu = _paired_arrays(model, ps, a)
    _paired_arrays(model, ps, b)

    sign_a, log_a = _signed_logs(nu, mu, a)
    sign_b, log_b = _signed_logs(nu, mu, b)
    sign = int(np.prod(sign_a) * np.prod(sign_b))
    diffs = log_a - log_b
    partial = deterministic_sum(diffs)

    top = float(mu[-1])
    tail = adaptive_quad(
        lambda e: -float(mean_spectral_shift(model, ext, e)) * (a - b) / ((e - a) * (e - b)),
        top, np.inf, TAIL_TOL,
    )
    nearest = top - max(a, b)
    span = abs(a - b)
    fluctuation, g_bar = _fluctuation_bound(mu, span ** 2 / (3.0 * nearest ** 3), span / nearest ** 2)
    # second order of log1p, which does not cancel between a and b
    curvature = g_bar * span / (2.0 * nearest ** 2)
    bound = (fluctuation + curvature + tail.error_estimate
             + _root_error(nu, 1.0 / (nu - a) - 1.0 / (nu - b))
             + 8.0 * np.finfo(float).eps * float(np.sum(np.abs(diffs))))
    return PairedSum(partial + tail.value, bound, partial, tail.value, cutoff, sign)


def auto_cutoff(model, tol):
    """Cutoff at which the paired-sum fluctuation estimate reaches tol, capped by Config.MAX_CUTOFF."""
    tol = float(tol)
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    first = float(levels_through(model, 1e-9).values[1])
    cutoff = (3.0 * math.sqrt(first) / tol) ** (2.0 / 3.0)
    return min(max(cutoff, 4.0 * first), Config.MAX_CUTOFF)
