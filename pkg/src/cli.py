"""
Command-line front end: single evaluations, sweeps and the verification suite.
Results go to stdout (or --out); diagnostics go to stderr.
"""
import sys
import math
import logging
import argparse
from dataclasses import replace

import numpy as np

from config import Config
from .errors import DomainError, PoleError, PseudolapError
from .models import ModelKind, enumerate_levels, heat_trace
from .numerics import agreement
from .pseudospectrum import (
    auto_cutoff, negative_root, secular_roots, verify_trace_identity,
)
from .reports import ReportGenerator, emit
from .scattering import f_asymptotic, f_closed, f_prime
from .validators import RunConfig, RunConfigValidator, load_config_file
from .verifier import VerificationSuite
from .zetadet import (
    RelativeZetaParams, corollary_limit_path, expected_constant, logdet_pseudo_at_zero,
    logdet_pseudo_theorem, logdet_star, logdet_star_crosscheck, relative_zeta_prime_numeric,
)

logger = logging.getLogger('pseudolap')

PROG = 'pseudolap'


class _Parser(argparse.ArgumentParser):
    """Usage errors raise instead of exiting so main() can map them to exit 2."""

    def error(self, message):
        raise DomainError(message)


def _check_dict(check):
    return {
        'lhs': check.lhs,
        'rhs': check.rhs,
        'abs_diff': check.abs_diff,
        'tol': check.tol,
        'pass': check.passed,
    }


def _exit_code(*checks):
    return 0 if all(c.passed for c in checks) else 1


# ── subcommands ──

def cmd_levels(cfg, args):
    model = cfg.build_model()
    if cfg.lambda_max is None:
        raise DomainError("levels needs --lambda-max")
    table = enumerate_levels(model, cfg.lambda_max)
    if cfg.format == 'csv':
        emit(table.to_records(), 'csv', cfg.out, columns=['mu', 'multiplicity'])
    else:
        emit(table.to_dict(), 'json', cfg.out)
    return 0


def cmd_heat_trace(cfg, args):
    model = cfg.build_model()
    records = []
    for t in args.t:
        method = 'direct' if t >= Config.HEAT_SPLIT else 'dual'
        records.append({'model': model.name, 't': t, 'theta': heat_trace(model, t, method=method),
                        'method': method})
    emit(records if len(records) > 1 or cfg.format == 'csv' else records[0], cfg.format, cfg.out,
         columns=['model', 't', 'theta', 'method'])
    return 0


def _require_lambda(cfg):
    if cfg.lam is None:
        raise DomainError("--lambda is required")
    return cfg.lam


def cmd_scatter(cfg, args):
    model = cfg.build_model()
    lam = _require_lambda(cfg)
    value = f_closed(model, lam)
    slope = f_prime(model, lam)
    record = {
        'model': model.name,
        'lambda': lam,
        'F': value.value,
        'F_prime': slope.value,
        'error_bound': value.error_bound,
        'method': value.method.value,
    }
    emit([record] if cfg.format == 'csv' else record, cfg.format, cfg.out)
    return 0


def cmd_sweep(cfg, args):
    model = cfg.build_model()
    if args.steps < 2:
        raise DomainError("--steps must be at least 2")
    records = []
    for lam in np.linspace(args.start, args.stop, args.steps):
        try:
            value = f_closed(model, float(lam))
        except PoleError as e:
            logger.warning(f"sweep skips lambda={float(lam)!r}: {e}")
            continue
        records.append({'lambda': float(lam), 'F': value.value, 'error_bound': value.error_bound})
    emit(records, cfg.format, cfg.out, columns=['lambda', 'F', 'error_bound'])
    return 0


def _cutoff(cfg, model):
    return cfg.lambda_max if cfg.lambda_max is not None else auto_cutoff(model, cfg.tol)


def cmd_roots(cfg, args):
    model = cfg.build_model()
    ext = cfg.build_extension()
    ps = secular_roots(model, ext, _cutoff(cfg, model), workers=cfg.workers)
    if cfg.format == 'csv':
        emit(ps.to_records(), 'csv', cfg.out, columns=['nu', 'source_mu', 'residual'])
    else:
        emit(ps.to_dict(), 'json', cfg.out)
    return 0


def cmd_trace_check(cfg, args):
    model = cfg.build_model()
    ext = cfg.build_extension()
    lam = _require_lambda(cfg)
    cutoff = _cutoff(cfg, model)
    ps = None if ext.friedrichs else secular_roots(model, ext, cutoff, workers=cfg.workers)
    check = verify_trace_identity(model, ext, lam, cutoff, tol=cfg.tol, ps=ps)
    record = {'model': model.name, 'alpha': ext.alpha, 'lambda': lam, 'cutoff': cutoff,
              'check': _check_dict(check), 'error_bound': check.bound}
    emit(record, cfg.format, cfg.out)
    return _exit_code(check)


def _lambda_tilde(cfg, default=None):
    if cfg.lambda_tilde is not None:
        return cfg.lambda_tilde
    if default is None:
        raise DomainError("--lambda-tilde is required")
    return default


def cmd_det(cfg, args):
    model = cfg.build_model()
    ext = cfg.build_extension(default=0.0)
    lam_tilde = _lambda_tilde(cfg)
    det = logdet_pseudo_theorem(model, ext, lam_tilde)
    moved = logdet_pseudo_theorem(model, ext, lam_tilde, split=Config.MELLIN_SPLIT / 2.0)
    check = agreement('logdet_split', det.log_abs, moved.log_abs, cfg.tol, det.error_bound + moved.error_bound)
    record = {'model': model.name, 'alpha': ext.alpha, 'lambda_tilde': lam_tilde,
              **det.to_dict(), 'check': _check_dict(check)}
    emit(record, cfg.format, cfg.out)
    return _exit_code(check)


def cmd_det_star(cfg, args):
    model = cfg.build_model()
    det = logdet_star(model)
    check = logdet_star_crosscheck(model, tol=min(cfg.tol, 1e-8))
    record = {'model': model.name, **det.to_dict(), 'check': _check_dict(check)}
    emit(record, cfg.format, cfg.out)
    return _exit_code(check)


def cmd_theorem_check(cfg, args):
    model = cfg.build_model()
    ext = cfg.build_extension()
    lam_tilde = _lambda_tilde(cfg, default=1.5 * negative_root(model, ext).value)
    det = logdet_pseudo_theorem(model, ext, lam_tilde)
    rel = relative_zeta_prime_numeric(model, ext, lam_tilde, RelativeZetaParams(C=cfg.C))
    check = agreement('relative_zeta_closed', -rel.value, rel.closed + expected_constant(model),
                      cfg.tol, rel.error_estimate)
    record = {'model': model.name, 'alpha': ext.alpha, 'lambda_tilde': lam_tilde, **det.to_dict(),
              'check': _check_dict(check), 'fitted_constant': rel.fitted_constant, 'C': rel.C}
    emit(record, cfg.format, cfg.out)
    return _exit_code(check)


def cmd_corollary_check(cfg, args):
    model = cfg.build_model()
    ext = cfg.build_extension()
    lam_tilde = _lambda_tilde(cfg, default=-1e-3)
    at_zero = logdet_pseudo_at_zero(model, ext)
    path = corollary_limit_path(model, ext, lam_tilde)
    check = agreement('corollary_limit', path.log_abs, at_zero.log_abs, max(cfg.tol, 1e-4))
    if path.sign != at_zero.sign:
        check = replace(check, passed=False, detail=f"sign {path.sign} vs {at_zero.sign}")
    record = {'model': model.name, 'alpha': ext.alpha, 'lambda_tilde': path.lam_tilde,
              **at_zero.to_dict(), 'check': _check_dict(check)}
    emit(record, cfg.format, cfg.out)
    return _exit_code(check)


def cmd_asymptotics_check(cfg, args):
    model = cfg.build_model()
    lam = cfg.lam if cfg.lam is not None else (-400.0 if model.kind == ModelKind.FLAT_TORUS3 else -100.0)
    closed = f_closed(model, lam)
    asym = f_asymptotic(model, lam)
    check = agreement('asymptotics', closed.value, asym.value, cfg.tol, asym.error_bound + closed.error_bound)
    record = {'model': model.name, 'lambda': lam, 'F': closed.value, 'asymptotic': asym.value,
              'order': asym.order, 'check': _check_dict(check)}
    emit(record, cfg.format, cfg.out)
    return _exit_code(check)


def cmd_verify(cfg, args):
    model = cfg.build_model()
    ext = cfg.build_extension(default=math.pi / 4)
    suite = VerificationSuite(model, ext, tol=cfg.tol, cutoff=cfg.lambda_max, C=cfg.C, workers=cfg.workers)
    results = suite.run()
    if cfg.format == 'csv':
        emit([r.to_dict() for r in results], 'csv', cfg.out,
             columns=['name', 'lhs', 'rhs', 'abs_diff', 'tol', 'bound', 'pass', 'detail'])
    else:
        emit({'model': model.name, 'alpha': ext.alpha, 'passed': all(r.passed for r in results),
              'checks': [r.to_dict() for r in results]}, 'json', cfg.out)
    reporter = ReportGenerator()
    if args.report:
        reporter.generate_verification_report(results, args.report, title=model.kind.value)
    logger.info(reporter.generate_summary(results, model.name))
    return _exit_code(*results)


COMMANDS = {
    'levels': (cmd_levels, "distinct eigenvalues and multiplicities up to --lambda-max"),
    'heat-trace': (cmd_heat_trace, "heat trace Theta(t)"),
    'scatter': (cmd_scatter, "scattering coefficient F and F' at --lambda"),
    'sweep': (cmd_sweep, "F over a lambda grid"),
    'roots': (cmd_roots, "pseudo-Laplacian eigenvalues from the secular equation"),
    'trace-check': (cmd_trace_check, "paired trace sum against g(lambda)"),
    'det': (cmd_det, "log det(Delta_alpha - lambda_tilde) with sign"),
    'det-star': (cmd_det_star, "log det* of the Laplacian"),
    'theorem-check': (cmd_theorem_check, "relative zeta derivative against the comparison formula"),
    'corollary-check': (cmd_corollary_check, "det Delta_alpha against its lambda_tilde -> 0 limit"),
    'asymptotics-check': (cmd_asymptotics_check, "F against its large negative lambda law"),
    'verify': (cmd_verify, "run the full acceptance suite"),
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--model", choices=['torus2', 'torus3', 'sphere3'], help="Model manifold.")
    common.add_argument("--basis", type=str, help='Lattice rows, e.g. "1,0,0;0,1,0;0,0,1".')
    common.add_argument("--alpha", type=float, help="Extension angle in radians, [0, pi).")
    common.add_argument("--alpha-deg", dest='alpha_deg', type=float, help="Extension angle in degrees.")
    common.add_argument("--lambda", dest='lam', type=float, help="Spectral parameter.")
    common.add_argument("--lambda-tilde", dest='lambda_tilde', type=float, help="Determinant shift (< 0).")
    common.add_argument("--lambda-max", dest='lambda_max', type=float, help="Spectral cutoff.")
    common.add_argument("--tol", type=float, help=f"Tolerance (default {Config.DEFAULT_TOL}).")
    common.add_argument("--C", dest='C', type=float, help=f"Cut parameter (default {Config.DEFAULT_C}).")
    common.add_argument("--format", choices=['json', 'csv'], help="Output format (default json).")
    common.add_argument("--out", type=str, help="Output path; stdout when omitted.")
    common.add_argument("--config", type=str, help="JSON file with run settings; flags override it.")
    common.add_argument("--workers", type=int, help="Threads for the secular root search.")
    common.add_argument("--verbose", "-v", action="store_true", help="Log progress to stderr.")

    parser = _Parser(prog=PROG, description="Spectra and determinants of pseudo-Laplacians on model manifolds.")
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == 'heat-trace':
            p.add_argument("--t", type=float, nargs='+', required=True, help="Time(s) t > 0.")
        elif name == 'sweep':
            p.add_argument("--start", type=float, required=True, help="First lambda.")
            p.add_argument("--stop", type=float, required=True, help="Last lambda.")
            p.add_argument("--steps", type=int, default=50, help="Grid points.")
        elif name == 'verify':
            p.add_argument("--report", type=str, help="Write a formatted .xlsx workbook of all checks.")
    return parser


def build_run_config(args):
    """Config defaults, then the --config file, then flags."""
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for name in RunConfig.field_names():
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    cfg = RunConfig(**values)
    valid, message = RunConfigValidator.validate(cfg)
    if not valid:
        raise DomainError(message)
    return cfg


def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logger.setLevel(logging.INFO)
        cfg = build_run_config(args)
        handler = COMMANDS[args.command][0]
        logger.debug(f"{args.command}: {cfg}")
        return handler(cfg, args)
    except PseudolapError as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return e.exit_code
