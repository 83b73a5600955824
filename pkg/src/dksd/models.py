"""Null densities on the sphere and the model-spec mini-language.

Each model exposes its *unnormalized* log density and the gradient of that
log density in spherical coordinates. Normalizing constants never enter the
Stein machinery; :func:`vmf_log_normalizer` exists for quadrature checks and
sampler diagnostics only.
"""

import math
import re
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotConverged, ParseError, ValidationError
from .geometry import tangent_rows, to_cartesian

SYMMETRY_TOL = 1e-6
UNIT_TOL = 1e-6


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


def _check_points(x, d):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != d:
        raise DimensionError(f"expected points with {d} components, got shape {x.shape}")
    return x


class DirectionalModel:
    """Common interface of the null models. Instances are immutable."""

    kind = None
    d = None

    def log_density_unnormalized(self, x):
        raise NotImplementedError

    def grad_log_density(self, x):
        """Euclidean gradient of the unnormalized log density at ``x``."""
        raise NotImplementedError

    def score_spherical(self, theta):
        """Gradient of ``log q`` in the angles, excluding the ``log J`` part."""
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape[-1] != self.d - 1:
            raise DimensionError(f"expected {self.d - 1} angles, got shape {theta.shape}")
        rows = tangent_rows(theta)
        return self.score_from_rows(to_cartesian(theta), rows)

    def score_from_rows(self, x, rows):
        """Score given precomputed points ``x`` and tangent rows."""
        g = self.grad_log_density(x)
        return np.multiply(rows, g[..., None, :], order="C").sum(axis=-1)


@dataclass(frozen=True, eq=False)
class Uniform(DirectionalModel):
    d: int
    kind = "uniform"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValidationError(f"dimension must be an integer >= 2, got {self.d}")

    def log_density_unnormalized(self, x):
        x = _check_points(x, self.d)
        return np.zeros(x.shape[:-1])

    def grad_log_density(self, x):
        x = _check_points(x, self.d)
        return np.zeros(x.shape)

    def __eq__(self, other):
        return isinstance(other, Uniform) and self.d == other.d

    def __hash__(self):
        return hash(("uniform", self.d))

    def __repr__(self):
        return f"Uniform(d={self.d})"


@dataclass(frozen=True, eq=False)
class VonMisesFisher(DirectionalModel):
    """``q(x) ~ exp(kappa mu.x)``."""

    mu: np.ndarray
    kappa: float
    kind = "vmf"

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 2:
            raise ValidationError("mu must be a vector with at least two components")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise ValidationError(f"mu must have unit norm, got {np.linalg.norm(mu):.15g}")
        if not self.kappa > 0:
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def d(self):
        return self.mu.size

    def log_density_unnormalized(self, x):
        x = _check_points(x, self.d)
        return self.kappa * (x * self.mu).sum(axis=-1)

    def grad_log_density(self, x):
        x = _check_points(x, self.d)
        return np.broadcast_to(self.kappa * self.mu, x.shape)

    def __eq__(self, other):
        return (
            isinstance(other, VonMisesFisher)
            and self.kappa == other.kappa
            and np.array_equal(self.mu, other.mu)
        )

    def __hash__(self):
        return hash(("vmf", self.kappa, tuple(self.mu)))

    def __repr__(self):
        return f"VonMisesFisher(mu={self.mu.tolist()}, kappa={self.kappa})"


@dataclass(frozen=True, eq=False)
class FisherBingham(DirectionalModel):
    """``q(x) ~ exp(x'Ax + b'x)`` with ``A`` symmetric; ``b`` defaults to 0."""

    A: np.ndarray
    b: np.ndarray = None

    kind = "fb"

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise ValidationError("A must be a square matrix of size >= 2")
        if not np.all(np.isfinite(A)):
            raise ValidationError("A has non-finite entries")
        if np.max(np.abs(A - A.T)) > 1e-12:
            raise ValidationError("A must be symmetric")
        b = np.zeros(A.shape[0]) if self.b is None else np.asarray(self.b, dtype=np.float64)
        if b.shape != (A.shape[0],):
            raise ValidationError(f"b must have length {A.shape[0]}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))

    @property
    def d(self):
        return self.A.shape[0]

    def log_density_unnormalized(self, x):
        x = _check_points(x, self.d)
        Ax = np.multiply(self.A, x[..., None, :], order="C").sum(axis=-1)
        return (x * Ax).sum(axis=-1) + (x * self.b).sum(axis=-1)

    def grad_log_density(self, x):
        x = _check_points(x, self.d)
        Ax = np.multiply(self.A, x[..., None, :], order="C").sum(axis=-1)
        return 2.0 * Ax + self.b

    def __eq__(self, other):
        return (
            isinstance(other, FisherBingham)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
        )

    def __hash__(self):
        return hash(("fb", self.A.tobytes(), self.b.tobytes()))

    def __repr__(self):
        return f"FisherBingham(A={self.A.tolist()}, b={self.b.tolist()})"


def log_density_unnormalized(model, x):
    return model.log_density_unnormalized(x)


def score_spherical(model, theta):
    return model.score_spherical(theta)


# --- special functions ----------------------------------------------------


def bessel_i(v, z, max_terms=200):
    """Modified Bessel function of the first kind, ``I_v(z)``.

    Ascending series ``sum_m (z/2)^(2m+v) / (m! Gamma(m+v+1))``, stopped once
    a term adds less than 1e-16 relative to the partial sum. Accurate to
    ~1e-14 relative for ``z <= 50``.
    """
    if v < 0 or z < 0:
        raise ValueError("bessel_i needs v >= 0 and z >= 0")
    if z == 0.0:
        return 1.0 if v == 0 else 0.0
    half = 0.5 * z
    term = math.exp(v * math.log(half) - math.lgamma(v + 1.0))
    total = term
    q = half * half
    for m in range(1, max_terms):
        term *= q / (m * (m + v))
        total += term
        if term < 1e-16 * total:
            return total
    raise NotConverged(f"I_{v}({z}) series did not converge in {max_terms} terms")


def vmf_log_normalizer(d, kappa):
    """``log C_d(kappa)`` with ``C_d = kappa^(d/2-1) / ((2 pi)^(d/2) I_(d/2-1)(kappa))``.

    ``C_d`` normalizes ``exp(kappa mu.x)`` against surface measure. Against
    the uniform probability measure the normalizer is ``1 / (S_(d-1) C_d)``.
    """
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    nu = d / 2.0 - 1.0
    return nu * math.log(kappa) - (d / 2.0) * math.log(2.0 * math.pi) - math.log(bessel_i(nu, kappa))


# --- model specs -----------------------------------------------------------

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def _parse_real(token, col):
    tok = token.strip()
    if not _NUMBER.match(tok):
        raise ParseError(f"expected a real number, got {tok!r}", 1, col)
    return float(tok)


def _parse_reals(text, col, sep=","):
    out = []
    pos = col
    for part in text.split(sep):
        out.append(_parse_real(part, pos + (len(part) - len(part.lstrip()))))
        pos += len(part) + 1
    return out


def _split_fields(body, offset):
    """Split on ';' into (name, value, column) triples.

    A segment without '=' directly after an ``A`` field is taken as further
    matrix rows, so ``A=2,1,1;1,2,1;1,1,2`` is read like ``A=2,1,1|1,2,1|1,1,2``.
    """
    fields = []
    pos = offset
    for seg in body.split(";"):
        col = pos + 1
        pos += len(seg) + 1
        if not seg.strip():
            raise ParseError("empty field", 1, col)
        if "=" not in seg:
            if fields and fields[-1][0] == "A":
                name, value, vcol = fields[-1]
                fields[-1] = (name, value + "|" + seg, vcol)
                continue
            raise ParseError(f"expected name=value, got {seg.strip()!r}", 1, col)
        name, value = seg.split("=", 1)
        vcol = col + len(name) + 1
        name = name.strip()
        if not name:
            raise ParseError("missing field name", 1, col)
        if any(f[0] == name for f in fields):
            raise ParseError(f"duplicate field {name!r}", 1, col)
        fields.append((name, value, vcol))
    return fields


def parse_model_spec(text):
    """Parse ``kind:field=value;...`` into a model.

    ``uniform:d=3``, ``vmf:mu=1,0,0;kappa=1.0``, ``fb:A=2,1,1|1,2,1|1,1,2;b=0,0,1``.
    """
    if ":" not in text:
        raise ParseError("expected 'kind:fields'", 1, len(text) + 1)
    head, body = text.split(":", 1)
    kind = head.strip().lower()
    offset = len(head) + 1
    fields = _split_fields(body, offset)
    by_name = {name: (value, col) for name, value, col in fields}

    def take(name, required=True):
        if name not in by_name:
            if required:
                raise ParseError(f"missing field {name!r} for kind {kind!r}", 1, len(text) + 1)
            return None
        return by_name.pop(name)

    if kind == "uniform":
        value, col = take("d")
        tok = value.strip()
        if not re.fullmatch(r"\d+", tok):
            raise ParseError(f"d must be an integer, got {tok!r}", 1, col)
        d = int(tok)
        if d < 2:
            raise ValidationError(f"d must be >= 2, got {d}")
        model = Uniform(d)
    elif kind == "vmf":
        mu = np.array(_parse_reals(*take("mu")))
        kappa = _parse_real(*take("kappa"))
        dfield = take("d", required=False)
        if kappa <= 0:
            raise ValidationError(f"kappa must be positive, got {kappa}")
        norm = np.linalg.norm(mu)
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValidationError(f"mu must be a unit vector (norm {norm:.6g})")
        if dfield is not None and int(_parse_real(*dfield)) != mu.size:
            raise ValidationError("d does not match the length of mu")
        if abs(norm - 1.0) > 1e-12:
            mu = mu / norm
        model = VonMisesFisher(mu, kappa)
    elif kind == "fb":
        value, col = take("A")
        rows = []
        pos = col
        for row in value.split("|"):
            rows.append(_parse_reals(row, pos))
            pos += len(row) + 1
        if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
            raise ValidationError("A must be a square matrix")
        A = np.array(rows)
        asym = np.max(np.abs(A - A.T))
        if asym > SYMMETRY_TOL:
            raise ValidationError(f"A must be symmetric (max asymmetry {asym:.3g})")
        if asym > 0:
            warnings.warn(f"symmetrizing A (max asymmetry {asym:.3g})", stacklevel=2)
            A = 0.5 * (A + A.T)
        bfield = take("b", required=False)
        b = None if bfield is None else np.array(_parse_reals(*bfield))
        if b is not None and b.size != A.shape[0]:
            raise ValidationError(f"b must have {A.shape[0]} entries")
        model = FisherBingham(A, b)
    else:
        raise ParseError(f"unknown model kind {kind!r}", 1, 1)

    if by_name:
        name = next(iter(by_name))
        raise ParseError(f"unexpected field {name!r}", 1, by_name[name][1])
    return model


def _fmt(v):
    return repr(float(v))


def render_model_spec(model):
    """Canonical spec text; ``parse_model_spec(render_model_spec(m)) == m``."""
    if isinstance(model, Uniform):
        return f"uniform:d={model.d}"
    if isinstance(model, VonMisesFisher):
        mu = ",".join(_fmt(v) for v in model.mu)
        return f"vmf:mu={mu};kappa={_fmt(model.kappa)}"
    if isinstance(model, FisherBingham):
        A = "|".join(",".join(_fmt(v) for v in row) for row in model.A)
        text = f"fb:A={A}"
        if np.any(model.b != 0):
            text += ";b=" + ",".join(_fmt(v) for v in model.b)
        return text
    raise TypeError(f"cannot render {type(model).__name__}")
