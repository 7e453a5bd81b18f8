import json
import math
from dataclasses import dataclass, fields

from config import Config
from .errors import DomainError
from .models import LatticeBasis, ManifoldModel, ModelKind
from .scattering import ExtensionParam


@dataclass
class RunConfig:
    """Everything one CLI invocation needs; flags override --config file values."""
    model: str = None
    basis: str = None
    alpha: float = None
    alpha_deg: float = None
    lam: float = None
    lambda_tilde: float = None
    lambda_max: float = None
    tol: float = Config.DEFAULT_TOL
    C: float = Config.DEFAULT_C
    format: str = 'json'
    out: str = None
    workers: int = Config.WORKERS

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def build_model(self):
        kind = ModelKind(self.model)
        if kind == ModelKind.SPHERE3:
            return ManifoldModel.sphere3()
        return ManifoldModel.flat_torus(LatticeBasis.from_string(self.basis))

    def build_extension(self, default=None):
        if self.alpha_deg is not None:
            return ExtensionParam.from_degrees(self.alpha_deg)
        if self.alpha is None:
            if default is None:
                raise DomainError("--alpha is required")
            return ExtensionParam(default)
        return ExtensionParam(self.alpha)


def _coerce(name, kind, value):
    """Convert one config-file value to its RunConfig field type."""
    if kind is str:
        if not isinstance(value, str):
            raise DomainError(f"config key '{name}' must be a string, got {value!r}")
        return value
    if isinstance(value, (bool, list, dict)):
        raise DomainError(f"config key '{name}' must be a number, got {value!r}")
    try:
        number = float(value)
    except (TypeError, ValueError) as e:
        raise DomainError(f"config key '{name}' must be a number, got {value!r}") from e
    if kind is int:
        if not number.is_integer():
            raise DomainError(f"config key '{name}' must be an integer, got {value!r}")
        return int(number)
    return number


def load_config_file(path):
    """RunConfig fields from a JSON object; 'lambda' is accepted for lam."""
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise DomainError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise DomainError(f"config file {path} must hold a JSON object")
    data = {k.replace('-', '_'): v for k, v in data.items()}
    if 'lambda' in data:
        data['lam'] = data.pop('lambda')
    unknown = set(data) - set(RunConfig.field_names())
    if unknown:
        raise DomainError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kinds = {f.name: f.type for f in fields(RunConfig)}
    return {k: _coerce(k, kinds[k], v) for k, v in data.items() if v is not None}


class RunConfigValidator:
    @staticmethod
    def validate(cfg):
        """Validate a RunConfig against its model kind"""
        kinds = [k.value for k in ModelKind]
        if cfg.model not in kinds:
            return False, f"model must be one of {', '.join(kinds)}"

        if cfg.model == ModelKind.SPHERE3.value:
            if cfg.basis:
                return False, "sphere3 takes no basis"
        else:
            if not cfg.basis:
                return False, f"{cfg.model} requires --basis"
            try:
                basis = LatticeBasis.from_string(cfg.basis)
            except DomainError as e:
                return False, str(e)
            expected = 2 if cfg.model == ModelKind.FLAT_TORUS2.value else 3
            if basis.dimension != expected:
                return False, f"{cfg.model} needs a {expected}x{expected} basis"

        if cfg.alpha is not None and cfg.alpha_deg is not None:
            return False, "give either --alpha or --alpha-deg, not both"
        if cfg.alpha is not None and not (math.isfinite(cfg.alpha) and 0 <= cfg.alpha < math.pi):
            return False, "alpha must lie in [0, pi)"
        if cfg.alpha_deg is not None and not (math.isfinite(cfg.alpha_deg) and 0 <= cfg.alpha_deg < 180):
            return False, "alpha-deg must lie in [0, 180)"

        for name, label in (('lam', 'lambda'), ('lambda_tilde', 'lambda-tilde')):
            value = getattr(cfg, name)
            if value is not None and not math.isfinite(value):
                return False, f"{label} must be finite"
        if cfg.lambda_tilde is not None and not cfg.lambda_tilde < 0:
            return False, "lambda-tilde must be negative"
        if cfg.lambda_max is not None and not cfg.lambda_max > 0:
            return False, "lambda-max must be positive"

        if not (math.isfinite(cfg.tol) and 0 < cfg.tol < 1):
            return False, "tol must lie in (0, 1)"
        if not cfg.C >= 10:
            return False, "C must be at least 10"
        if cfg.format not in ('json', 'csv'):
            return False, "format must be json or csv"
        if int(cfg.workers) < 1:
            return False, "workers must be >= 1"

        return True, "Valid"
