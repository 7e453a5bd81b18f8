"""
Verifier: runs the acceptance checks for one model and extension.
Each group compares two independent computations and yields CheckResults.
"""
import math
import logging
import time

import numpy as np

from config import Config
from .errors import PseudolapError
from .models import ModelKind, heat_trace, heat_trace_dual_remainder, heat_trace_leading
from .numerics import CheckResult, agreement, heat_integral_identity_check
from .pseudospectrum import (
    auto_cutoff, check_interlacing, negative_root, negative_root_count, secular_roots,
    spectral_log_ratio, verify_trace_identity,
)
from .scattering import (
    ExtensionParam, f_asymptotic, f_closed, f_diff_spectral, f_images, f_prime,
)
from .zetadet import (
    RelativeZetaParams, corollary_limit_path, expected_constant, logdet_pseudo_at_zero,
    logdet_pseudo_theorem, logdet_star_crosscheck, logdet_unperturbed,
    relative_zeta_prime_numeric,
)

logger = logging.getLogger('pseudolap')

PROBE_LAMBDAS = (-2.0, -5.0, -20.0, -100.0)
RATIO_LAMBDAS = (-2.0, -5.0, -10.0)
ALPHA_SET = (math.pi / 6, math.pi / 4, math.pi / 2, 3 * math.pi / 4, 0.999 * math.pi)


def bound_check(name, value, limit, detail=''):
    """Pass when value <= limit."""
    value, limit = float(value), float(limit)
    passed = bool(np.isfinite(value) and value <= limit)
    if not passed:
        logger.warning(f"check '{name}' failed: {value:.3g} > {limit:.3g}")
    return CheckResult(name, value, limit, abs(value - limit), limit, 0.0, passed, detail)


def failed_check(name, error):
    return CheckResult(name, math.nan, math.nan, math.nan, math.nan, 0.0, False, str(error))


# ── individual checks ──

def check_closed_form(model):
    """F against an independent evaluation and the pole law at 0."""
    results = []
    if model.kind == ModelKind.SPHERE3:
        results.append(agreement('f_closed_sphere', f_closed(model, -2.0).value,
                                 1.0 / (4.0 * math.pi * math.tanh(math.pi)), 1e-9))
    else:
        closed, images = f_closed(model, -2.0), f_images(model, -2.0)
        results.append(agreement('f_closed_vs_images', closed.value, images.value, 1e-9,
                                 closed.error_bound + images.error_bound))
    lam = -1e-4
    results.append(agreement('pole_residue', lam * f_closed(model, lam).value, 1.0 / model.volume, 1e-4))
    return results


def check_spectral_agreement(model, tol=1e-8):
    """F(lam) - F(lam0) in closed form against the spectral sum."""
    lam0 = -2.0 if model.kind == ModelKind.SPHERE3 else -1.5
    base = f_closed(model, lam0)
    results = []
    for lam in PROBE_LAMBDAS:
        closed = f_closed(model, lam)
        spectral = f_diff_spectral(model, lam, lam0)
        results.append(agreement(
            f'f_diff_spectral({lam:g})', closed.value - base.value, spectral.value, tol,
            closed.error_bound + base.error_bound + spectral.error_bound,
        ))
    closed = f_prime(model, -2.0)
    spectral = f_prime(model, -2.0, method='spectral')
    results.append(agreement('f_prime_methods', closed.value, spectral.value, tol,
                             closed.error_bound + spectral.error_bound))
    return results


def check_asymptotics(model):
    """Large negative lam laws: O(lambda^-2) in 2D, exponentially small in 3D."""
    if model.dimension == 2:
        errors = {}
        for lam in (-100.0, -400.0):
            errors[lam] = abs(f_closed(model, lam).value - f_asymptotic(model, lam).value)
        return [
            bound_check('asymptotic_error(-100)', errors[-100.0], 2e-5),
            bound_check('asymptotic_decay', 10.0 * errors[-400.0], errors[-100.0],
                        'error must drop tenfold from -100 to -400'),
        ]
    if model.kind == ModelKind.SPHERE3:
        lam, limit = -100.0, 1e-12
    else:
        lam, limit = -400.0, 1e-9
    closed, asym = f_closed(model, lam), f_asymptotic(model, lam)
    return [bound_check(f'asymptotic_error({lam:g})', abs(closed.value - asym.value), limit)]


def check_secular(model, ext, ps):
    """Interlacing, one negative root per angle and the sphere's closed-form roots."""
    findings = check_interlacing(ps)
    results = [bound_check('interlacing_violations', len(findings), 0, '; '.join(findings))]
    for alpha in ALPHA_SET:
        count = negative_root_count(model, ExtensionParam(alpha))
        results.append(bound_check(f'negative_roots(alpha={alpha:.6g})', abs(count - 1), 0,
                                   f'{count} sign changes below 0'))
    if model.kind == ModelKind.SPHERE3 and math.isclose(ext.alpha, math.pi / 2, abs_tol=1e-15):
        for n, root in enumerate(ps.roots[:5]):
            expected = (n + 0.5) ** 2 - 1.0
            results.append(agreement(f'sphere_root({n})', root.value, expected, 1e-10 * max(1.0, abs(expected))))
    return results


def check_trace(model, ext, ps, tol):
    lam = -2.0 if model.kind == ModelKind.SPHERE3 else -5.0
    results = [verify_trace_identity(model, ext, lam, ps.cutoff, tol=tol, ps=ps)]
    if model.kind == ModelKind.SPHERE3 and math.isclose(ext.alpha, math.pi / 2, abs_tol=1e-15):
        oracle = 0.5 * math.pi * math.tanh(math.pi) - 0.5 * (math.pi / math.tanh(math.pi) - 1.0)
        results.append(agreement('trace_closed_oracle', results[0].lhs, oracle, 1e-4))
    return results


def check_theorem_ratio(model, ext, ps, tol=1e-4):
    """Paired log-ratio sum against (cot(alpha) - F(a)) / (cot(alpha) - F(b))."""
    results = []
    c = ext.cot_alpha
    for a, b in ((RATIO_LAMBDAS[0], RATIO_LAMBDAS[1]), (RATIO_LAMBDAS[1], RATIO_LAMBDAS[2])):
        ratio = spectral_log_ratio(model, ext, a, b, ps.cutoff, ps)
        expected = (c - f_closed(model, a).value) / (c - f_closed(model, b).value)
        results.append(agreement(f'theorem_ratio({a:g},{b:g})', ratio.value, math.log(abs(expected)),
                                 tol, ratio.error_bound, f'sign {ratio.sign} vs {int(np.sign(expected))}'))
        results.append(bound_check(f'theorem_ratio_sign({a:g},{b:g})',
                                   abs(ratio.sign - np.sign(expected)), 0))
    return results


def check_relative_zeta(model, ext, C=None):
    """-D against the closed comparison, the fitted constant and independence of C."""
    nu0 = negative_root(model, ext).value
    lam_tilde = 1.5 * nu0
    first = relative_zeta_prime_numeric(model, ext, lam_tilde, RelativeZetaParams(C=C))
    second = relative_zeta_prime_numeric(model, ext, lam_tilde, RelativeZetaParams(C=4.0 * first.C))
    constant = expected_constant(model)
    tol = 1e-4 if model.dimension == 2 else 1e-5
    return [
        agreement('relative_zeta_closed', -first.value, first.closed + constant, tol, first.error_estimate),
        agreement('relative_zeta_constant', first.fitted_constant, constant, 1e-3),
        agreement('relative_zeta_C_invariance', first.value, second.value, 1e-6,
                  first.error_estimate + second.error_estimate, f'C={first.C:.6g} and {second.C:.6g}'),
    ]


def check_corollary(model, ext):
    at_zero = logdet_pseudo_at_zero(model, ext)
    path = corollary_limit_path(model, ext)
    other = logdet_pseudo_at_zero(model, ExtensionParam(math.pi / 6 if ext.alpha != math.pi / 6 else math.pi / 2))
    return [
        agreement('corollary_limit', path.log_abs, at_zero.log_abs, 1e-4,
                  detail=f'lam_tilde={path.lam_tilde:.6g}'),
        bound_check('corollary_sign', abs(path.sign - at_zero.sign), 0),
        agreement('corollary_alpha_independence', at_zero.log_abs, other.log_abs, 1e-10),
    ]


def check_sign_rule(model, ext):
    """One negative eigenvalue of Delta_alpha - lam_tilde exactly when lam_tilde lies in (nu_0, 0)."""
    nu0 = negative_root(model, ext).value
    below = logdet_pseudo_theorem(model, ext, 1.5 * nu0)
    above = logdet_pseudo_theorem(model, ext, 0.5 * nu0)
    return [
        bound_check('sign_below_nu0', abs(below.sign - 1), 0),
        bound_check('sign_above_nu0', abs(above.sign + 1), 0),
    ]


def check_determinants(model, tol=1e-8):
    """Split-point independence, the Mellin quadrature identity and heat-trace regimes."""
    split = Config.MELLIN_SPLIT
    first = logdet_unperturbed(model, -1.0, split)
    second = logdet_unperturbed(model, -1.0, split / 2.0)
    quad = heat_integral_identity_check(1.0, -2.0)
    t = Config.HEAT_SPLIT
    direct = heat_trace(model, t, method='direct')
    dual = heat_trace(model, t, method='dual')
    return [
        agreement('logdet_split', first.log_abs, second.log_abs, tol, first.error_bound + second.error_bound),
        logdet_star_crosscheck(model, split, tol),
        agreement('heat_integral_identity', quad.value, 2.0 * math.sqrt(math.pi) * math.exp(-math.sqrt(2.0)),
                  1e-9, quad.error_estimate),
        agreement('heat_trace_regimes', direct, dual, 1e-10 * max(1.0, abs(direct)),
                  detail=f'leading {heat_trace_leading(model, t)!r}, remainder {heat_trace_dual_remainder(model, t)!r}'),
    ]


class VerificationSuite:
    """All acceptance checks for one model and extension angle."""

    def __init__(self, model, ext, tol=None, cutoff=None, C=None, workers=None):
        self.model = model
        self.ext = ext
        self.tol = Config.DEFAULT_TOL if tol is None else float(tol)
        self.cutoff = cutoff
        self.C = C
        self.workers = workers
        self._ps = None

    def _groups(self):
        groups = [
            ('closed_form', lambda: check_closed_form(self.model)),
            ('spectral_agreement', lambda: check_spectral_agreement(self.model)),
            ('asymptotics', lambda: check_asymptotics(self.model)),
            ('determinants', lambda: check_determinants(self.model)),
        ]
        if self.ext.friedrichs:
            logger.info("Friedrichs extension: skipping pseudo-Laplacian checks")
            return groups
        return groups + [
            ('secular', lambda: check_secular(self.model, self.ext, self._spectrum())),
            ('trace', lambda: check_trace(self.model, self.ext, self._spectrum(), self.tol)),
            ('theorem_ratio', lambda: check_theorem_ratio(self.model, self.ext, self._spectrum())),
            ('relative_zeta', lambda: check_relative_zeta(self.model, self.ext, self.C)),
            ('corollary', lambda: check_corollary(self.model, self.ext)),
            ('sign_rule', lambda: check_sign_rule(self.model, self.ext)),
        ]

    def _spectrum(self):
        if self._ps is None:
            cutoff = self.cutoff or auto_cutoff(self.model, self.tol)
            self._ps = secular_roots(self.model, self.ext, cutoff, workers=self.workers)
        return self._ps

    def run(self):
        """Run every group; an exception fails its group without stopping the rest."""
        start_time = time.time()
        logger.info("=" * 60)
        logger.info(f"Verifying {self.model.name}, alpha={self.ext.alpha!r}")
        logger.info("=" * 60)

        results = []
        for name, group in self._groups():
            group_start = time.time()
            try:
                checks = group()
            except PseudolapError as e:
                logger.error(f"{name}: {e}")
                checks = [failed_check(name, e)]
            passed = sum(1 for c in checks if c.passed)
            logger.info(f"--- {name}: {passed}/{len(checks)} passed in {time.time() - group_start:.2f}s ---")
            results.extend(checks)

        failed = [c.name for c in results if not c.passed]
        logger.info(f"Verification complete in {time.time() - start_time:.2f}s")
        if failed:
            logger.warning(f"Failed checks: {', '.join(failed)}")
        return results
