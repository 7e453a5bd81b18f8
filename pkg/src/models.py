"""
Model manifolds: flat 2- and 3-tori and the round 3-sphere.

Spectra, volumes, exact heat traces and resolvent kernels. Torus
eigenvalues are 4 pi^2 |k*|^2 over the dual lattice; the sphere has
k(k+2) with multiplicity (k+1)^2.
"""
import math
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import special

from config import Config
from .errors import DomainError, SpectrumTooLargeError
from .numerics import bessel_k0_array, deterministic_sum

logger = logging.getLogger('pseudolap')

FOUR_PI_SQ = 4.0 * math.pi ** 2
SPHERE_VOLUME = 2.0 * math.pi ** 2

# e^{-x} relative to 1 is below double precision past these exponents
HEAT_EXPONENT = 42.0
DUAL_EXPONENT = 45.0
INCLUSION_SLACK = 1e-12
MERGE_TOL = 1e-9
MAX_DENOMINATOR = 10 ** 6


class ModelKind(str, Enum):
    FLAT_TORUS2 = 'torus2'
    FLAT_TORUS3 = 'torus3'
    SPHERE3 = 'sphere3'


@dataclass(frozen=True)
class LatticeBasis:
    """Rows are the periods of the lattice."""
    vectors: tuple

    def __post_init__(self):
        rows = tuple(tuple(float(x) for x in row) for row in self.vectors)
        object.__setattr__(self, 'vectors', rows)
        d = len(rows)
        if d not in (2, 3) or any(len(row) != d for row in rows):
            raise DomainError(f"basis must be a 2x2 or 3x3 matrix, got {rows}")
        if not all(math.isfinite(x) for row in rows for x in row):
            raise DomainError("basis entries must be finite")
        det = float(np.linalg.det(np.array(rows)))
        scale = float(np.prod(np.linalg.norm(np.array(rows), axis=1)))
        if abs(det) <= 1e-12 * scale:
            raise DomainError("basis rows are linearly dependent")
        if det < 0:
            raise DomainError("basis must be positively oriented (det > 0)")

    @classmethod
    def from_string(cls, text):
        """Parse "a,b,c;d,e,f;g,h,i"."""
        try:
            rows = [[float(x) for x in row.split(',')] for row in text.strip().split(';') if row.strip()]
        except ValueError as e:
            raise DomainError(f"cannot parse basis '{text}': {e}") from e
        return cls(tuple(tuple(r) for r in rows))

    @classmethod
    def cubic(cls, side=1.0, dimension=3):
        return cls(tuple(tuple(side if i == j else 0.0 for j in range(dimension)) for i in range(dimension)))

    @property
    def dimension(self):
        return len(self.vectors)

    @property
    def matrix(self):
        return np.array(self.vectors, dtype=float)

    @property
    def volume(self):
        return float(np.linalg.det(self.matrix))

    @property
    def dual_matrix(self):
        """Rows b*_j with b_i . b*_j = delta_ij."""
        return np.linalg.inv(self.matrix).T

    def to_string(self):
        return ';'.join(','.join(f"{x:g}" for x in row) for row in self.vectors)


@dataclass(frozen=True)
class ManifoldModel:
    kind: ModelKind
    basis: LatticeBasis = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        if self.kind == ModelKind.SPHERE3:
            if self.basis is not None:
                raise DomainError("sphere3 takes no lattice basis")
            return
        if self.basis is None:
            raise DomainError(f"{self.kind.value} requires a lattice basis")
        expected = 2 if self.kind == ModelKind.FLAT_TORUS2 else 3
        if self.basis.dimension != expected:
            raise DomainError(f"{self.kind.value} requires a {expected}x{expected} basis")

    @classmethod
    def sphere3(cls):
        return cls(ModelKind.SPHERE3)

    @classmethod
    def flat_torus(cls, basis):
        kind = ModelKind.FLAT_TORUS2 if basis.dimension == 2 else ModelKind.FLAT_TORUS3
        return cls(kind, basis)

    @property
    def is_torus(self):
        return self.kind != ModelKind.SPHERE3

    @property
    def dimension(self):
        return 2 if self.kind == ModelKind.FLAT_TORUS2 else 3

    @property
    def volume(self):
        return SPHERE_VOLUME if self.kind == ModelKind.SPHERE3 else self.basis.volume

    @property
    def name(self):
        if self.is_torus:
            return f"{self.kind.value}({self.basis.to_string()})"
        return self.kind.value


@dataclass(frozen=True)
class EigenLevel:
    value: float
    multiplicity: int


@dataclass(frozen=True, eq=False)
class SpectrumTable:
    """Distinct eigenvalues <= cutoff with exact multiplicities."""
    model: ManifoldModel
    values: np.ndarray
    multiplicities: np.ndarray
    cutoff: float
    complete: bool = True

    @cached_property
    def levels(self):
        return [EigenLevel(float(v), int(m)) for v, m in zip(self.values, self.multiplicities)]

    def __len__(self):
        return len(self.values)

    def count(self):
        """N(cutoff), eigenvalues counted with multiplicity."""
        return int(self.multiplicities.sum())

    def truncate(self, cutoff):
        n = int(np.searchsorted(self.values, cutoff * (1 + INCLUSION_SLACK), side='right'))
        return SpectrumTable(self.model, self.values[:n], self.multiplicities[:n], float(cutoff), self.complete)

    def to_records(self):
        return [{'mu': level.value, 'multiplicity': level.multiplicity} for level in self.levels]

    def to_dict(self):
        return {
            'model': self.model.name,
            'cutoff': float(self.cutoff),
            'levels': [[level.value, level.multiplicity] for level in self.levels],
        }


# ── lattice scans ──

def _box_bounds(row_norms, radius):
    return [int(math.floor(radius * n * (1 + INCLUSION_SLACK))) for n in row_norms]


def _check_budget(bounds):
    count = 1
    for b in bounds:
        count *= 2 * b + 1
    if count > Config.MAX_LATTICE_POINTS:
        raise SpectrumTooLargeError(
            f"lattice scan needs {count} points, budget is {Config.MAX_LATTICE_POINTS}"
        )
    return count


def _box_chunks(bounds):
    """Integer points of the box, one slab of the first coordinate at a time."""
    rest = [np.arange(-b, b + 1) for b in bounds[1:]]
    grid = np.stack(np.meshgrid(*rest, indexing='ij'), axis=-1).reshape(-1, len(rest))
    for k0 in range(-bounds[0], bounds[0] + 1):
        yield np.column_stack([np.full(len(grid), k0), grid])


_cache_lock = threading.Lock()
_vector_cache = {}
_level_cache = {}


def lattice_vectors(basis, radius):
    """Lattice points L with |L| <= radius, zero included, sorted by norm."""
    radius = float(radius)
    with _cache_lock:
        cached = _vector_cache.get(basis)
    if cached is None or cached[0] < radius:
        vectors, norms = _scan_vectors(basis, radius)
        with _cache_lock:
            _vector_cache[basis] = (radius, vectors, norms)
    else:
        _, vectors, norms = cached
    n = int(np.searchsorted(norms, radius * (1 + INCLUSION_SLACK), side='right'))
    return vectors[:n], norms[:n]


def _scan_vectors(basis, radius):
    bounds = _box_bounds(np.linalg.norm(basis.dual_matrix, axis=1), radius)
    _check_budget(bounds)
    B = basis.matrix
    kept_vectors, kept_norms = [], []
    for chunk in _box_chunks(bounds):
        vecs = chunk @ B
        norms = np.sqrt(np.einsum('ij,ij->i', vecs, vecs))
        mask = norms <= radius * (1 + INCLUSION_SLACK)
        kept_vectors.append(vecs[mask])
        kept_norms.append(norms[mask])
    vectors = np.concatenate(kept_vectors)
    norms = np.concatenate(kept_norms)
    order = np.argsort(norms, kind='stable')
    logger.debug(f"lattice scan radius={radius:.4g}: {len(norms)} points")
    return vectors[order], norms[order]


def image_norms(basis, radius):
    """Norms of the nonzero lattice vectors inside the ball."""
    _, norms = lattice_vectors(basis, radius)
    return norms[1:]


def minimal_vector_length(basis):
    shortest_row = float(np.min(np.linalg.norm(basis.matrix, axis=1)))
    return float(image_norms(basis, shortest_row)[0])


def lattice_image_sum(basis, t):
    """S(t) = sum over nonzero L of exp(-|L|^2 / 4t)."""
    norms = image_norms(basis, math.sqrt(4.0 * t * DUAL_EXPONENT))
    return float(np.sum(np.exp(-norms * norms / (4.0 * t))))


# ── spectra ──

def _integer_gram(gram):
    """Exact integer form D*gram when entries are rational, else None."""
    fractions = []
    for x in gram.ravel():
        fr = Fraction(float(x)).limit_denominator(MAX_DENOMINATOR)
        if abs(float(fr) - x) > 1e-12 * max(1.0, abs(x)):
            return None
        fractions.append(fr)
    denominator = 1
    for fr in fractions:
        denominator = math.lcm(denominator, fr.denominator)
    if denominator > MAX_DENOMINATOR:
        return None
    ints = np.array([int(fr * denominator) for fr in fractions], dtype=np.int64).reshape(gram.shape)
    return ints, denominator


def _torus_levels(basis, cutoff):
    qmax = cutoff / FOUR_PI_SQ * (1 + INCLUSION_SLACK)
    rho = math.sqrt(qmax)
    bounds = _box_bounds(np.linalg.norm(basis.matrix, axis=1), rho)
    _check_budget(bounds)
    dual = basis.dual_matrix
    gram = dual @ dual.T
    exact = _integer_gram(gram)
    if exact is not None:
        bound = max(bounds) ** 2 * basis.dimension ** 2 * int(np.abs(exact[0]).max())
        if bound > 2 ** 62:
            exact = None

    kept = []
    if exact is not None:
        gram_int, denominator = exact
        limit = qmax * denominator
        for chunk in _box_chunks(bounds):
            q = np.einsum('ij,ij->i', chunk @ gram_int, chunk)
            kept.append(q[q <= limit])
        q_values, counts = np.unique(np.concatenate(kept), return_counts=True)
        values = FOUR_PI_SQ * q_values.astype(float) / denominator
        return values, counts.astype(np.int64)

    for chunk in _box_chunks(bounds):
        q = np.einsum('ij,ij->i', chunk @ gram, chunk)
        kept.append(q[q <= qmax])
    q_all = np.sort(np.concatenate(kept))
    # merge coincident floating-point norms
    breaks = np.flatnonzero(np.diff(q_all) > MERGE_TOL * np.maximum(1.0, q_all[1:])) + 1
    starts = np.concatenate([[0], breaks])
    counts = np.diff(np.concatenate([starts, [len(q_all)]]))
    values = FOUR_PI_SQ * q_all[starts]
    values[0] = 0.0
    return values, counts.astype(np.int64)


def _sphere_levels(cutoff):
    k_max = int(math.floor(math.sqrt(1.0 + cutoff * (1 + INCLUSION_SLACK)) - 1.0))
    k = np.arange(0, k_max + 1)
    return (k * (k + 2)).astype(float), ((k + 1) ** 2).astype(np.int64)


def enumerate_levels(model, cutoff):
    """All distinct eigenvalues <= cutoff with exact multiplicities."""
    cutoff = float(cutoff)
    if not cutoff > 0:
        raise DomainError(f"cutoff must be positive, got {cutoff}")
    with _cache_lock:
        cached = _level_cache.get(model)
    if cached is not None and cached.cutoff >= cutoff:
        return cached.truncate(cutoff)

    if model.is_torus:
        values, mults = _torus_levels(model.basis, cutoff)
    else:
        values, mults = _sphere_levels(cutoff)
    table = SpectrumTable(model, values, mults, cutoff)
    logger.debug(f"{model.name}: {len(table)} distinct levels up to {cutoff:.6g}")
    with _cache_lock:
        _level_cache[model] = table
    return table


def levels_through(model, cutoff):
    """Table up to cutoff plus the first distinct level above it."""
    table = enumerate_levels(model, cutoff)
    reach = max(cutoff, 1.0)
    while True:
        reach *= 1.5
        wider = enumerate_levels(model, reach)
        if len(wider) > len(table):
            return wider.truncate(float(wider.values[len(table)]))


def smooth_support(model):
    """Lower edge of the smooth density of states."""
    return -1.0 if model.kind == ModelKind.SPHERE3 else 0.0


def smooth_density(model, mu):
    """Smooth density of states dN/dmu; zero below smooth_support."""
    mu = np.asarray(mu, dtype=float)
    lo = smooth_support(model)
    shifted = np.clip(mu - lo, 0.0, None)
    if model.kind == ModelKind.SPHERE3:
        out = 0.5 * np.sqrt(shifted)
    elif model.dimension == 2:
        out = np.full_like(shifted, model.volume / (4.0 * math.pi))
    else:
        out = model.volume * np.sqrt(shifted) / (4.0 * math.pi ** 2)
    return np.where(mu >= lo, out, 0.0)


def weyl_count(model, cutoff):
    d = model.dimension
    return model.volume * cutoff ** (d / 2) / ((4.0 * math.pi) ** (d / 2) * special.gamma(d / 2 + 1))


# ── heat traces ──

def heat_trace_leading(model, t):
    """Closed small-t series: Vol (4 pi t)^{-d/2}, times e^t on the sphere."""
    d = model.dimension
    lead = model.volume * (4.0 * math.pi * t) ** (-d / 2)
    if model.kind == ModelKind.SPHERE3:
        lead *= math.exp(t)
    return lead


def heat_trace_dual_remainder(model, t):
    """Theta(t) - heat_trace_leading(t) from the theta-transformed sum."""
    t = float(t)
    if model.is_torus:
        return heat_trace_leading(model, t) * lattice_image_sum(model.basis, t)
    m_max = int(math.ceil(math.sqrt(DUAL_EXPONENT * t) / math.pi)) + 1
    m = np.arange(1, m_max + 1, dtype=float)
    x = math.pi ** 2 * m * m / t
    return heat_trace_leading(model, t) * 2.0 * deterministic_sum((1.0 - 2.0 * x) * np.exp(-x))


def _heat_trace_direct(model, t):
    table = enumerate_levels(model, max(HEAT_EXPONENT / t, 1.0))
    return deterministic_sum(table.multiplicities * np.exp(-table.values * t))


def heat_trace(model, t, method=None, split=None):
    """Theta(t) = sum m_k exp(-mu_k t); eigenvalue sum for t >= split, dual sum below."""
    t = float(t)
    if not t > 0:
        raise DomainError(f"heat_trace requires t > 0, got {t}")
    split = Config.HEAT_SPLIT if split is None else split
    if method is None:
        method = 'direct' if t >= split else 'dual'
    if method == 'direct':
        return _heat_trace_direct(model, t)
    if method == 'dual':
        return heat_trace_leading(model, t) + heat_trace_dual_remainder(model, t)
    raise DomainError(f"unknown heat-trace method '{method}'")


# ── resolvent kernels ──

def image_tail_bound(model, k, radius):
    vol = model.volume
    if model.dimension == 3:
        return (radius / k + 1.0 / k ** 2) * math.exp(-k * radius) / vol
    return math.sqrt(math.pi * radius / (2.0 * k)) * (1.0 + 1.0 / (k * radius)) * math.exp(-k * radius) / (k * vol)


def image_radius(model, k, target=1e-16):
    """Radius beyond which the image sum of e^{-k r} type terms is below target."""
    radius = max(minimal_vector_length(model.basis), 1.0 / k)
    while image_tail_bound(model, k, radius) > target:
        radius *= 1.25
    return radius


def _displacement(basis, dist):
    if np.ndim(dist) == 0:
        dist = float(dist)
        if not dist > 0:
            raise DomainError(f"distance must be positive, got {dist}")
        first = basis.matrix[0]
        return dist * first / np.linalg.norm(first)
    x = np.asarray(dist, dtype=float)
    if x.shape != (basis.dimension,):
        raise DomainError(f"displacement must have {basis.dimension} components")
    return x


def _torus_resolvent(model, dist, lam):
    k = math.sqrt(-lam)
    x = _displacement(model.basis, dist)
    radius = image_radius(model, k)
    vectors, _ = lattice_vectors(model.basis, radius + float(np.linalg.norm(x)))
    r = np.linalg.norm(vectors + x, axis=1)
    if np.any(r <= 1e-300):
        raise DomainError("points coincide modulo the lattice")
    if model.dimension == 3:
        terms = np.exp(-k * r) / (4.0 * math.pi * r)
    else:
        terms = bessel_k0_array(k * r) / (2.0 * math.pi)
    return deterministic_sum(terms)


def _sphere_resolvent(theta, lam):
    theta = float(theta)
    if not 0 < theta < math.pi:
        raise DomainError(f"geodesic distance must lie in (0, pi), got {theta}")
    denom = 4.0 * math.pi * math.sin(theta)
    u = lam + 1.0
    if abs(u) < 1e-14:
        return (math.pi - theta) / (math.pi * denom)
    if u < 0:
        q = math.sqrt(-u)
        ratio = (math.exp(-theta * q) - math.exp(-(2.0 * math.pi - theta) * q)) / -math.expm1(-2.0 * math.pi * q)
        return ratio / denom
    s = math.sqrt(u)
    return math.sin((math.pi - theta) * s) / (math.sin(math.pi * s) * denom)


def resolvent_kernel(model, dist, lam):
    """Kernel of (Delta - lam)^{-1} for lam < 0.

    Sphere: dist is the geodesic angle. Torus: dist is either a scalar
    (displacement along the first period) or a displacement vector.
    """
    lam = float(lam)
    if not lam < 0:
        raise DomainError(f"resolvent kernel needs lam < 0, got {lam}")
    if model.is_torus:
        return _torus_resolvent(model, dist, lam)
    return _sphere_resolvent(dist, lam)
