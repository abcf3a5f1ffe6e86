"""Catalog of weight functions and return functions for continuous markets.

All callables accept an array of points of shape ``(N, d)`` (or a single
point of shape ``(d,)``) and return one value per point. Each catalog entry
carries a ``spec`` dict that round-trips through the JSON market schema;
arbitrary Python callables are accepted programmatically but have no spec.
"""

import numpy as np

from .errors import DOutOfRange, NegativeWeight, SchemaError


def _as_points(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        return x.reshape(1, 1), True
    if x.ndim == 1:
        return x.reshape(1, -1), True
    return x, False


class _Catalog:
    spec = None

    def __call__(self, x):
        pts, single = _as_points(x)
        out = self._eval(pts)
        return float(out[0]) if single else out


class ConstantWeight(_Catalog):
    def __init__(self, value=1.0):
        if value < 0:
            raise NegativeWeight(f"constant weight {value} is negative")
        self.value = float(value)
        self.spec = {"kind": "constant", "value": self.value}

    def _eval(self, pts):
        return np.full(pts.shape[0], self.value)


class PolynomialWeight(_Catalog):
    """Sum of ``coef * prod_k x_k**powers[k]``; must be non-negative wherever evaluated."""

    def __init__(self, terms):
        self.terms = [(float(c), tuple(int(p) for p in powers)) for c, powers in terms]
        if not self.terms:
            raise SchemaError("polynomial needs at least one term")
        self.spec = {"kind": "polynomial",
                     "terms": [{"coef": c, "powers": list(p)} for c, p in self.terms]}

    def _poly(self, pts):
        out = np.zeros(pts.shape[0])
        for c, powers in self.terms:
            if len(powers) != pts.shape[1]:
                raise SchemaError(f"term powers {powers} do not match dimension {pts.shape[1]}")
            out += c * np.prod(pts ** np.asarray(powers), axis=1)
        return out

    def _eval(self, pts):
        out = self._poly(pts)
        if np.any(out < 0):
            raise NegativeWeight("polynomial weight takes negative values at evaluated points")
        return out


class BoxWeight(_Catalog):
    """``value`` on the open box ``lower < x < upper``, zero elsewhere; ``None`` bounds are infinite."""

    def __init__(self, lower, upper, value=1.0):
        if value < 0:
            raise NegativeWeight(f"box weight value {value} is negative")
        self.lower = np.array([-np.inf if v is None else v for v in lower], dtype=float)
        self.upper = np.array([np.inf if v is None else v for v in upper], dtype=float)
        if self.lower.shape != self.upper.shape:
            raise SchemaError("box lower/upper lengths differ")
        self.value = float(value)
        self.spec = {"kind": "box",
                     "lower": [None if np.isinf(v) else float(v) for v in self.lower],
                     "upper": [None if np.isinf(v) else float(v) for v in self.upper],
                     "value": self.value}

    def _eval(self, pts):
        inside = np.all((pts > self.lower) & (pts < self.upper), axis=1)
        return np.where(inside, self.value, 0.0)


class PolynomialReturn(PolynomialWeight):
    def __init__(self, terms):
        super().__init__(terms)
        self.spec = {"form": "polynomial", "terms": self.spec["terms"]}

    def _eval(self, pts):
        return self._poly(pts)


class LinearReturn(_Catalog):
    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.spec = {"form": "linear", "coeffs": self.coeffs.tolist()}

    def _eval(self, pts):
        return pts @ self.coeffs


class MartingaleReturn(_Catalog):
    """The return function that makes ``D * Z`` the log-optimal stake.

    ``g(x) = (sqrt(det(S0 S^-1)) * exp(-x'(S^-1 - S0^-1)x / 2) - 1) / D``, so
    that ``N(0,S)(x) = N(0,S0)(x) * (1 + D g(x))`` pointwise.
    """

    def __init__(self, sigma, sigma0, D):
        D = float(D)
        if not 0.0 < D < 1.0:
            raise DOutOfRange(f"D={D} must lie in the open interval (0, 1)")
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        sigma0 = np.atleast_2d(np.asarray(sigma0, dtype=float))
        self.D = D
        self.quad = np.linalg.inv(sigma) - np.linalg.inv(sigma0)
        self.log_scale = 0.5 * (np.linalg.slogdet(sigma0)[1] - np.linalg.slogdet(sigma)[1])
        self.spec = {"form": "martingale", "D": D}

    def growth(self, x):
        """``1 + D g(x)``, evaluated without cancellation."""
        pts, single = _as_points(x)
        q = np.einsum("ni,ij,nj->n", pts, self.quad, pts)
        out = np.exp(self.log_scale - 0.5 * q)
        return float(out[0]) if single else out

    def _eval(self, pts):
        return (self.growth(pts) - 1.0) / self.D


class CallableFunction(_Catalog):
    """Adapter for a user callable mapping ``(N, d)`` points to ``(N,)`` values."""

    def __init__(self, fn, non_negative=False):
        self.fn = fn
        self.non_negative = non_negative

    def _eval(self, pts):
        out = np.asarray(self.fn(pts), dtype=float).reshape(pts.shape[0])
        if self.non_negative and np.any(out < 0):
            raise NegativeWeight("weight function returned negative values")
        return out


def is_constant_weight(fn):
    return isinstance(fn, ConstantWeight)


def weight_from_spec(spec, dim):
    if spec == "one":
        return ConstantWeight(1.0)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SchemaError(f"unrecognised weight spec {spec!r}")
    kind = spec["kind"]
    if kind == "constant":
        return ConstantWeight(spec.get("value", 1.0))
    if kind == "polynomial":
        return PolynomialWeight(_terms(spec, dim))
    if kind == "box":
        if len(spec["lower"]) != dim or len(spec["upper"]) != dim:
            raise SchemaError("box bounds must have one entry per dimension")
        return BoxWeight(spec["lower"], spec["upper"], spec.get("value", 1.0))
    raise SchemaError(f"unknown weight kind {kind!r}")


# "eq24" is the form name used by the published market schema.
_MARTINGALE_FORMS = ("martingale", "eq24")


def return_from_spec(spec, sigma, sigma0):
    dim = np.atleast_2d(sigma).shape[0]
    if not isinstance(spec, dict) or "form" not in spec:
        raise SchemaError(f"unrecognised return spec {spec!r}")
    form = spec["form"]
    if form in _MARTINGALE_FORMS:
        return MartingaleReturn(sigma, sigma0, spec["D"])
    if form == "linear":
        if len(spec["coeffs"]) != dim:
            raise SchemaError("linear return needs one coefficient per dimension")
        return LinearReturn(spec["coeffs"])
    if form == "polynomial":
        return PolynomialReturn(_terms(spec, dim))
    raise SchemaError(f"unknown return form {form!r}")


def _terms(spec, dim):
    if "terms" in spec:
        return [(t["coef"], t["powers"]) for t in spec["terms"]]
    if "coeffs" in spec:
        # shorthand for one-dimensional polynomials: coeffs[k] multiplies x**k
        if dim != 1:
            raise SchemaError("'coeffs' shorthand is only valid for dim=1")
        return [(c, [k]) for k, c in enumerate(spec["coeffs"])]
    raise SchemaError("polynomial spec needs 'terms' or 'coeffs'")
