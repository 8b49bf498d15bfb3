"""Model parameters, the edge law, the weight family and closed-form constants.

The model lives on Z^d: every site carries an i.i.d. weight ``W`` and, given
the weights, sites ``x != y`` are joined independently with probability

    p(x, y) = 1 - exp(-lambda * W_x * W_y / |x - y|**alpha).

Weights are either a point mass or a Pareto law with tail exponent
``tau - 1``; the degree-tail exponent is ``gamma = alpha * (tau - 1) / d``.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from numba import njit
from scipy import integrate

from .errors import (
    DivergenceError,
    DomainError,
    InapplicableBoundError,
    InfiniteMomentError,
    NumericalError,
    RegimeError,
)

CONSTANT = "constant"
PARETO = "pareto"

YES = "yes"
NO = "no"
BOUNDARY = "boundary"
UNKNOWN = "unknown"

_QUAD_REL = 1e-9


# ---------------------------------------------------------------------------
# weights and parameters


@dataclass(frozen=True)
class WeightDistribution:
    """Weight law: ``Constant(value)`` or ``Pareto(tau, w_min)``.

    ``P(W > w) = (w / w_min) ** -(tau - 1)`` for ``w >= w_min`` in the Pareto
    case.  With ``normalize_mean`` every sample is multiplied by the constant
    ``1 / E[W]`` of the raw law, so that the mean becomes one.
    """

    kind: str
    tau: float = None
    w_min: float = 1.0
    value: float = None
    normalize_mean: bool = False

    def __post_init__(self):
        if self.kind == CONSTANT:
            if self.value is None or not self.value >= 0 or math.isinf(self.value):
                raise DomainError(f"constant weight must be a finite nonnegative real, got {self.value!r}")
            if self.normalize_mean and self.value == 0:
                raise DomainError("cannot normalize the mean of the zero weight")
        elif self.kind == PARETO:
            if self.tau is None or not self.tau > 1 or math.isinf(self.tau):
                raise DomainError(f"Pareto tau must be a finite real > 1, got {self.tau!r}")
            if not self.w_min > 0 or math.isinf(self.w_min):
                raise DomainError(f"Pareto w_min must be positive, got {self.w_min!r}")
            if self.normalize_mean and self.tau <= 2:
                raise InfiniteMomentError(f"Pareto(tau={self.tau}) has infinite mean; cannot normalize")
        else:
            raise DomainError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def constant(cls, value=1.0, normalize_mean=False):
        return cls(CONSTANT, value=float(value), normalize_mean=normalize_mean)

    @classmethod
    def pareto(cls, tau, w_min=1.0, normalize_mean=False):
        return cls(PARETO, tau=float(tau), w_min=float(w_min), normalize_mean=normalize_mean)

    @property
    def is_pareto(self):
        return self.kind == PARETO

    @property
    def scale(self):
        """Factor applied to raw samples (1 unless the mean is normalized)."""
        if not self.normalize_mean:
            return 1.0
        if self.kind == CONSTANT:
            return 1.0 / self.value
        return (self.tau - 2.0) / (self.w_min * (self.tau - 1.0))

    @property
    def support_min(self):
        """Essential infimum of the (scaled) law."""
        return (self.value if self.kind == CONSTANT else self.w_min) * self.scale

    def scaled(self, c):
        """Law of ``c * W`` (with normalization folded into the parameters)."""
        if c <= 0:
            raise DomainError("scale factor must be positive")
        if self.kind == CONSTANT:
            return WeightDistribution.constant(self.support_min * c)
        return WeightDistribution.pareto(self.tau, self.support_min * c)

    def survival(self, w):
        """``P(W > w)``."""
        w = np.asarray(w, dtype=float)
        a = self.support_min
        if self.kind == CONSTANT:
            return np.where(w < a, 1.0, 0.0)
        return np.where(w < a, 1.0, (np.maximum(w, a) / a) ** (1.0 - self.tau))

    def quantile_from_survival(self, u):
        """Inverse transform: the ``w`` with ``P(W > w) = u`` for ``u in (0, 1)``."""
        u = np.asarray(u, dtype=float)
        if self.kind == CONSTANT:
            return np.full_like(u, self.support_min)
        return self.support_min * u ** (-1.0 / (self.tau - 1.0))

    def to_dict(self):
        if self.kind == CONSTANT:
            return {"kind": CONSTANT, "value": self.value, "normalize_mean": self.normalize_mean}
        return {"kind": PARETO, "tau": self.tau, "min": self.w_min, "normalize_mean": self.normalize_mean}

    def describe(self):
        if self.kind == CONSTANT:
            s = f"constant({self.value!r})"
        else:
            s = f"pareto(tau={self.tau!r},min={self.w_min!r})"
        return s + (",normalized" if self.normalize_mean else "")


@dataclass(frozen=True)
class ModelParams:
    d: int
    alpha: float
    lam: float
    weights: WeightDistribution = field(default_factory=WeightDistribution.constant)
    norm: str = "l2"

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d!r}")
        if not self.alpha > 0 or math.isinf(self.alpha):
            raise DomainError(f"alpha must be a positive real, got {self.alpha!r}")
        if not self.lam > 0 or math.isinf(self.lam):
            raise DomainError(f"lambda must be a positive real, got {self.lam!r}")
        if self.norm != "l2":
            raise DomainError("only the Euclidean (l2) norm is supported")

    def with_lambda(self, lam):
        return replace(self, lam=float(lam))

    def to_dict(self):
        return {
            "dimension": self.d,
            "alpha": self.alpha,
            "lambda": self.lam,
            "weights": self.weights.to_dict(),
        }


# ---------------------------------------------------------------------------
# edge law


def edge_probability(w_x, w_y, r, params):
    """``1 - exp(-lambda * w_x * w_y / r**alpha)`` for a displacement of length ``r > 0``."""
    if not r > 0:
        raise DomainError(f"edge probability needs r > 0 (no self-edges), got r={r!r}")
    if w_x < 0 or w_y < 0:
        raise DomainError("weights must be nonnegative")
    return -math.expm1(-params.lam * w_x * w_y / r**params.alpha)


@njit(cache=True, nogil=True)
def edge_probability_r2(lam, alpha, w_x, w_y, r2):
    """Edge probability from a squared distance; shared by every sampling path."""
    return -math.expm1(-lam * w_x * w_y / math.sqrt(r2) ** alpha)


def reparametrize_unit_lambda(params):
    """Equivalent parameters with ``lambda = 1`` and weights scaled by ``sqrt(lambda)``."""
    if params.lam == 1.0:
        return params
    return replace(params, lam=1.0, weights=params.weights.scaled(math.sqrt(params.lam)))


def gamma_exponent(params):
    w = params.weights
    if w.kind == CONSTANT:
        return math.inf
    return params.alpha * (w.tau - 1.0) / params.d


# ---------------------------------------------------------------------------
# regime classification


@dataclass(frozen=True)
class RegimeReport:
    degrees_infinite: bool
    gamma: float
    degree_variance_finite: str
    lambda_c_zero: str
    lambda_c_finite: str
    citations: dict

    def to_dict(self):
        return {
            "degrees_infinite": self.degrees_infinite,
            "gamma": None if math.isinf(self.gamma) else self.gamma,
            "degree_variance_finite": self.degree_variance_finite,
            "lambda_c_zero": self.lambda_c_zero,
            "lambda_c_finite": self.lambda_c_finite,
            "citations": dict(self.citations),
        }


_CITE_INFINITE = "infinite degrees when alpha <= d, or alpha > d with gamma <= 1"
_CITE_POWER_LAW = "degree tail regularly varying with exponent gamma when alpha > d and gamma > 1"
_CITE_FINITE_D2 = "lambda_c < infinity in d >= 2 when P(W = 0) < 1"
_CITE_FINITE_D1 = "lambda_c < infinity in d = 1 when alpha in (1, 2] and W bounded away from 0"
_CITE_INF_D1 = "lambda_c = infinity in d = 1 when alpha > 2 and gamma > 2"
_CITE_POSITIVE = "lambda_c > 0 when gamma > 2 (finite-variance degrees)"
_CITE_ZERO = "lambda_c = 0 when alpha > d and gamma in (1, 2) (infinite-variance degrees)"
_CITE_BOUNDARY = "gamma = 2 depends on the slowly varying correction; left undecided"


def classify_regime(params):
    d, alpha, w = params.d, params.alpha, params.weights
    gamma = gamma_exponent(params)
    cites = {}
    zero_weights = w.kind == CONSTANT and w.value == 0

    if zero_weights:
        cites["degrees_infinite"] = "all weights vanish: no edges"
        cites["lambda_c_zero"] = "all weights vanish: no edges"
        cites["lambda_c_finite"] = "all weights vanish: no edges"
        return RegimeReport(False, gamma, YES, NO, NO, cites)

    degrees_infinite = alpha <= d or gamma <= 1
    cites["degrees_infinite"] = _CITE_INFINITE if degrees_infinite else _CITE_POWER_LAW

    if degrees_infinite or gamma < 2:
        variance = NO
    elif gamma > 2:
        variance = YES
    else:
        variance = BOUNDARY
    cites["degree_variance_finite"] = _CITE_BOUNDARY if variance == BOUNDARY else _CITE_POWER_LAW

    if degrees_infinite:
        zero = YES
        cites["lambda_c_zero"] = _CITE_INFINITE
    elif gamma < 2:
        zero = YES
        cites["lambda_c_zero"] = _CITE_ZERO
    elif gamma > 2:
        zero = NO
        cites["lambda_c_zero"] = _CITE_POSITIVE
    else:
        zero = BOUNDARY
        cites["lambda_c_zero"] = _CITE_BOUNDARY

    bounded_below = w.support_min > 0
    if zero == YES:
        finite = YES
        cites["lambda_c_finite"] = cites["lambda_c_zero"]
    elif d >= 2:
        finite = YES
        cites["lambda_c_finite"] = _CITE_FINITE_D2
    elif 1 < alpha <= 2 and bounded_below:
        finite = YES
        cites["lambda_c_finite"] = _CITE_FINITE_D1
    elif alpha > 2 and gamma > 2:
        finite = NO
        cites["lambda_c_finite"] = _CITE_INF_D1
    else:
        finite = UNKNOWN
        cites["lambda_c_finite"] = "no result covers this case"
    return RegimeReport(degrees_infinite, gamma, variance, zero, finite, cites)


# ---------------------------------------------------------------------------
# moments and transforms of the weight law


def weight_moment(dist, s):
    """``E[W**s]`` (``inf`` when divergent)."""
    if s < 0:
        raise DomainError("moment order must be nonnegative")
    a = dist.support_min
    if dist.kind == CONSTANT:
        return a**s
    if s >= dist.tau - 1.0:
        return math.inf
    return a**s * (dist.tau - 1.0) / (dist.tau - 1.0 - s)


def _pareto_integrand_exp(tau, x):
    # W = a * e^s with density (tau - 1) e^{-(tau-1) s} ds
    k = tau - 1.0

    def f(s):
        t = x * math.exp(min(s, 700.0)) + k * s
        return k * math.exp(-t) if t < 745.0 else 0.0

    return f


def laplace_weight(dist, c):
    """``E[exp(-c W)]`` by adaptive quadrature (closed form for a point mass)."""
    if c < 0:
        raise DomainError("Laplace argument must be nonnegative")
    if c == 0:
        return 1.0
    a = dist.support_min
    if dist.kind == CONSTANT:
        return math.exp(-c * a)
    x = c * a
    k = dist.tau - 1.0
    # split where x e^s = 1 so the quadrature sees the transition
    s0 = max(0.0, -math.log(x))
    f = _pareto_integrand_exp(dist.tau, x)
    val, err = 0.0, 0.0
    for lo, hi in ((0.0, s0), (s0, math.inf)):
        if hi <= lo:
            continue
        v, e, *info = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200, full_output=1)
        if len(info) > 1 and e > _QUAD_REL * abs(v) and v > 1e-300:
            raise NumericalError("Laplace transform quadrature did not converge", c=c, value=v, error=e,
                                 message=info[1])
        val += v
        err += e
    return val


def laplace_complement(dist, c):
    """``1 - E[exp(-c W)]`` for an array of ``c``, accurate in relative terms for small ``c``."""
    c = np.ascontiguousarray(np.atleast_1d(np.asarray(c, dtype=float)))
    if np.any(c < 0):
        raise DomainError("Laplace argument must be nonnegative")
    a = dist.support_min
    if dist.kind == CONSTANT:
        return -np.expm1(-c * a)
    return _pareto_laplace_complement(c * a, dist.tau - 1.0, _GL_NODES, _GL_WEIGHTS)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@njit(cache=True, nogil=True)
def _pareto_laplace_complement(x, k, nodes, weights):
    # (tau-1) * int_0^inf (1 - exp(-x e^s)) e^{-(tau-1)s} ds, composite Gauss-Legendre
    # on unit-half panels; the integrand is entire in s, so the rule converges fast.
    out = np.empty(x.size)
    width = 0.5
    for i in range(x.size):
        xi = x[i]
        if xi == 0.0:
            out[i] = 0.0
            continue
        s0 = -math.log(xi)
        s_end = max(s0, 0.0) + 45.0 / k
        npan = int(math.ceil(s_end / width))
        total = 0.0
        for p in range(npan):
            mid = (p + 0.5) * width
            acc = 0.0
            for j in range(nodes.size):
                s = mid + 0.5 * width * nodes[j]
                acc += weights[j] * (-math.expm1(-xi * math.exp(s))) * math.exp(-k * s)
            total += acc * 0.5 * width
        # remaining tail: integrand <= e^{-k s}
        out[i] = k * total + math.exp(-k * npan * width)
        if out[i] > 1.0:
            out[i] = 1.0
    return out


# ---------------------------------------------------------------------------
# special functions and lattice constants


def gamma_function(x):
    if not x > 0:
        raise DomainError(f"gamma function implemented for x > 0 only, got {x!r}")
    return math.gamma(x)


def unit_ball_volume(d):
    if int(d) != d or d < 1:
        raise DomainError("dimension must be a positive integer")
    # V_d = (2 pi / d) V_{d-2} with V_0 = 1, V_1 = 2
    v = 2.0 if d % 2 else 1.0
    for k in range(2 + d % 2, d + 1, 2):
        v *= 2.0 * math.pi / k
    return v


@dataclass(frozen=True)
class LatticeSum:
    value: float
    error: float
    radius: int

    def to_dict(self):
        return {"value": self.value, "error": self.error, "radius": self.radius}


@njit(cache=True)
def _ball_power_sum(d, reach, r2max, alpha):
    # sum of |x|^-alpha and count over 0 < |x|^2 <= r2max, via the nonnegative orthant
    coords = np.zeros(d, dtype=np.int64)
    total = 0.0
    count = 0
    while True:
        # innermost coordinate handled in a closed loop
        base = 0
        nz = 0
        for k in range(d - 1):
            base += coords[k] * coords[k]
            if coords[k] != 0:
                nz += 1
        if base <= r2max:
            for t in range(reach + 1):
                n2 = base + t * t
                if n2 > r2max:
                    break
                if n2 == 0:
                    continue
                m = 1 << (nz + (1 if t != 0 else 0))
                total += m * n2 ** (-0.5 * alpha)
                count += m
        # odometer over the first d-1 coordinates
        k = d - 2
        while k >= 0:
            coords[k] += 1
            if coords[k] <= reach:
                break
            coords[k] = 0
            k -= 1
        if k < 0:
            break
    return total, count


def _tail_bounds(d, alpha, radius, n_inside):
    # sum_{|x| > R} |x|^-alpha = -R^-alpha N(R) + alpha int_R^inf N(r) r^(-alpha-1) dr,
    # with v (r - h)^d <= N(r) <= v (r + h)^d from unit cubes around lattice points
    v = unit_ball_volume(d)
    h = math.sqrt(d) / 2.0
    R = float(radius)

    def upper_integrand(r):
        return v * (r + h) ** d * r ** (-alpha - 1.0)

    def lower_integrand(r):
        return max(float(n_inside), v * max(r - h, 0.0) ** d) * r ** (-alpha - 1.0)

    r_star = h + (n_inside / v) ** (1.0 / d)
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    up = integrate.quad(upper_integrand, R, math.inf, **opts)[0]
    lo = 0.0
    if r_star > R:
        lo += integrate.quad(lower_integrand, R, r_star, **opts)[0]
        lo += integrate.quad(lower_integrand, r_star, math.inf, **opts)[0]
    else:
        lo += integrate.quad(lower_integrand, R, math.inf, **opts)[0]
    head = -float(n_inside) * R ** (-alpha)
    return head + alpha * lo, head + alpha * up


_MAX_BALL_POINTS = 3e8


def lattice_sum(d, alpha, rel_tol=1e-6):
    """``sum_{x in Z^d, x != 0} |x|^-alpha`` with a certified absolute error.

    Direct summation over ``|x| <= R`` plus rigorous upper and lower bounds on
    the remaining tail; ``R`` grows until the half-width of the bracket is at
    most ``rel_tol`` times the value.
    """
    if int(d) != d or d < 1:
        raise DomainError("dimension must be a positive integer")
    if alpha <= d:
        raise DivergenceError(f"lattice sum diverges for alpha={alpha} <= d={d}")
    if not rel_tol > 0:
        raise DomainError("rel_tol must be positive")
    radius = 16
    while True:
        if d == 1:
            k = np.arange(1, radius + 1, dtype=float)
            head = 2.0 * float(np.sum(k[::-1] ** -alpha))
            n_inside = 2 * radius + 1
        else:
            head, count = _ball_power_sum(d, radius, radius * radius, float(alpha))
            n_inside = count + 1
        lo, up = _tail_bounds(d, alpha, radius, n_inside)
        value = head + 0.5 * (lo + up)
        err = 0.5 * (up - lo)
        if err <= rel_tol * value:
            return LatticeSum(value, err, radius)
        # bracket width scales like R^(d-1-alpha); overshoot slightly
        grow = (err / (rel_tol * value)) ** (1.0 / (alpha + 1.0 - d))
        new_radius = int(math.ceil(radius * min(max(1.2 * grow, 1.5), 64.0)))
        points = unit_ball_volume(d) * new_radius**d / 2**d
        if points > _MAX_BALL_POINTS:
            raise NumericalError(
                "lattice sum cannot reach the requested tolerance within the point budget",
                d=d, alpha=alpha, rel_tol=rel_tol, radius=radius, value=value, error=err,
            )
        radius = new_radius


def xi_constant(params):
    """``lambda^(d/alpha) v_d Gamma(1 - d/alpha) E[W^(d/alpha)]``."""
    d, alpha = params.d, params.alpha
    if alpha <= d:
        raise DomainError(f"xi requires alpha > d (alpha={alpha}, d={d})")
    moment = weight_moment(params.weights, d / alpha)
    if math.isinf(moment):
        raise InfiniteMomentError(f"E[W^(d/alpha)] is infinite (gamma={gamma_exponent(params)} <= 1)")
    return params.lam ** (d / alpha) * unit_ball_volume(d) * gamma_function(1.0 - d / alpha) * moment


def lambda_c_lower_bound(params, rel_tol=1e-6):
    """``1 / (E[W^2] * sum_{x != 0} |x|^-alpha)``, valid whenever ``E[W^2] < inf``.

    The lattice sum is evaluated to ``rel_tol``, so the result carries a
    relative error of at most about ``rel_tol``.  The weight law is used as
    given; pass ``normalize_mean=True`` for the mean-one convention.
    """
    second = weight_moment(params.weights, 2.0)
    if math.isinf(second):
        raise InapplicableBoundError("the lower bound on lambda_c needs E[W^2] < infinity")
    if params.alpha <= params.d:
        raise DivergenceError(f"lattice sum diverges for alpha={params.alpha} <= d={params.d}")
    s = lattice_sum(params.d, params.alpha, rel_tol)
    return 1.0 / (second * s.value)


@dataclass(frozen=True)
class DistanceConstants:
    """Candidate constants ``c`` in ``d(0, x) ~ c log log |x|``.

    ``upper`` comes from the upper bound (``2 / |log(gamma - 1)|``) and
    ``lower`` from the lower bound (``2 / |log kappa|``); they coincide when
    ``tau <= 2``.
    """

    upper: float
    lower: float
    kappa: float
    equal: bool

    def to_dict(self):
        return {"upper": self.upper, "lower": self.lower, "kappa": self.kappa, "equal": self.equal}


def distance_constant(params):
    gamma = gamma_exponent(params)
    if params.alpha <= params.d:
        raise RegimeError("distances are trivial when alpha <= d (infinite degrees)")
    if not 1.0 < gamma < 2.0:
        raise RegimeError(f"doubly logarithmic distances need gamma in (1, 2), got {gamma}")
    tau = params.weights.tau
    upper = 2.0 / abs(math.log(gamma - 1.0))
    if tau <= 2.0:
        return DistanceConstants(upper, upper, gamma - 1.0, True)
    kappa = params.alpha / params.d - 1.0
    return DistanceConstants(upper, 2.0 / abs(math.log(kappa)), kappa, False)


# ---------------------------------------------------------------------------
# g(u) = E[(W1 W2 / u ^ 1)^p]


def _pareto_clipped_moment(c, a, tau, p):
    # E[min(c W, 1)^p] for W ~ Pareto(tau, a)
    if c * a >= 1.0:
        return 1.0
    k = tau - 1.0
    t = 1.0 / c
    tail = (a / t) ** k
    e = p + 1.0 - tau
    if e == 0.0:
        body = k * a**k * c**p * math.log(t / a)
    else:
        body = k * a**k * c**p * (t**e - a**e) / e
    return body + tail


def min_product_moment(dist, u, power=2):
    """``E[min(W1 W2 / u, 1) ** power]`` for independent copies ``W1, W2``.

    The inner expectation over ``W2`` is evaluated in closed form and the outer
    one by adaptive quadrature over ``log W1``.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    if power not in (1, 2):
        raise DomainError("power must be 1 or 2")
    a = dist.support_min
    if dist.kind == CONSTANT:
        return min(a * a / u, 1.0) ** power
    tau = dist.tau
    k = tau - 1.0
    s_kink = math.log(u / (a * a))
    if s_kink <= 0.0:
        return 1.0

    def f(s):
        w1 = a * math.exp(s)
        return k * math.exp(-k * s) * _pareto_clipped_moment(w1 / u, a, tau, power)

    val, err, *info = integrate.quad(f, 0.0, s_kink, epsabs=0.0, epsrel=1e-11, limit=400, full_output=1)
    if len(info) > 1 and err > 1e-6 * val:
        raise NumericalError("g(u) quadrature did not converge", u=u, value=val, error=err)
    # W1 > u / a makes the product exceed u whatever W2 is
    return val + math.exp(-k * s_kink)
