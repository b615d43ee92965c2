"""Explicit kernels, Gamma-ratio functions and the critical constants.

The base kernel is ``e_t(u) = e^{-tu} / (1 - e^{-u})``, with regular part
``r_t(u) = e_t(u) - 1/u``.  Differences like ``alpha e_t(u) - e_t(u/alpha)``
are formed from regular parts so that the ``1/u`` poles cancel exactly.

The constants:

* ``t0 = sup t_plus_P``, the threshold for convexity of ``u e_t(u)``;
* ``x0``, the positive root of ``sinh(x/2) = x`` (where ``Delta_Q`` changes sign);
* ``t1 = max_{x > x0} t_plus_Q``, the threshold for ``Theta^2 e_t >= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .numerics import find_root, integrate, maximize
from .specialfn import digamma, exp_remainder, log_gamma
from .theta import ScalarFunction

SERIES_CUTOFF = 1e-4
T1_CAP = 60.0

# reference values quoted in the literature for t1 (they disagree)
T1_REFERENCE_MAJ = 0.151649938034
T1_REFERENCE_HATS = 0.151463487259
X0_REFERENCE = 4.35463796993


@dataclass(frozen=True)
class AlphaWeights:
    """Weights ``alpha_k`` summing to one, with ``d = prod alpha_k^alpha_k``."""

    weights: tuple
    d_alpha: float = field(init=False)

    def __post_init__(self):
        w = tuple(float(a) for a in np.atleast_1d(self.weights))
        if not w:
            raise DomainError("need at least one weight")
        if len(w) == 1:
            ok = w[0] == 1.0
        else:
            ok = all(0.0 < a < 1.0 for a in w)
        if not ok:
            raise DomainError(f"weights must lie in (0, 1): {w}")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {math.fsum(w)!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "d_alpha", math.exp(math.fsum(a * math.log(a) for a in w)))

    @classmethod
    def geometric(cls, n: int) -> "AlphaWeights":
        """``alpha_k`` proportional to ``2^-k``, k = 1..n."""
        raw = [2.0 ** -k for k in range(1, n + 1)]
        s = math.fsum(raw)
        w = [r / s for r in raw]
        w[-1] = 1.0 - math.fsum(w[:-1])
        return cls(tuple(w))

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class KernelParams:
    alpha: float
    t: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.alpha != 1):
            raise DomainError("alpha must lie in (0, 1) or (1, inf)")
        if not self.t >= 0:
            raise DomainError("t must be >= 0")


# ---------------------------------------------------------------------------
# the e / g / h kernels

def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise DomainError("kernels are defined for u > 0")
    return u


def _regular(t: float, u: np.ndarray) -> np.ndarray:
    """``e_t(u) - 1/u`` with a second-order series below the cutoff."""
    small = u < SERIES_CUTOFF
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        direct = np.exp(-t * u) / -np.expm1(-u) - 1.0 / u
    series = (0.5 - t) + u * (1 / 12 - t / 2 + t * t / 2) + u * u * (-t / 12 + t * t / 4 - t ** 3 / 6)
    return np.where(small, series, direct)


def _e_value(t: float, u: np.ndarray) -> np.ndarray:
    """``e_t(u)`` itself; direct away from 0 where ``1/u + r_t`` would cancel."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        direct = np.exp(-t * u) / -np.expm1(-u)
    return np.where(u < SERIES_CUTOFF, 1.0 / u + _regular(t, u), direct)


# differences of e_t use regular parts while every argument is at most this
_REGULAR_MAX = 1.0


def _w_polys(order: int) -> list[np.ndarray]:
    """Coefficients of P_j with ``(-1)^j w^(j) = P_j(w)`` for ``w = 1/(e^u - 1)``.

    ``w' = -(w + w^2)`` gives ``P_{j+1} = P_j' (w + w^2)``; every coefficient is
    nonnegative, so evaluation involves no cancellation.
    """
    polys = [np.array([0.0, 1.0])]  # P_0 = w
    for _ in range(order):
        p = polys[-1]
        dp = np.polynomial.polynomial.polyder(p)
        polys.append(np.polynomial.polynomial.polymul(dp, [0.0, 1.0, 1.0]))
    return polys


def e_kernel(t: float, max_order: int = 12) -> ScalarFunction:
    """``u -> e^{-tu}/(1 - e^{-u})`` with closed-form derivatives up to ``max_order``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    polys = _w_polys(max_order)

    def value(u):
        return _e_value(t, _check_u(u))

    def nth(j):
        def deriv(u):
            u = _check_u(u)
            with np.errstate(over="ignore", divide="ignore"):
                w = 1.0 / np.expm1(u)
            # (-1)^j e_t^(j) = e^{-tu} sum_i C(j,i) t^(j-i) (-1)^i (1+w)^(i), all terms >= 0
            acc = np.zeros_like(u)
            for i in range(j + 1):
                q = 1.0 + w if i == 0 else np.polynomial.polynomial.polyval(w, polys[i])
                acc = acc + math.comb(j, i) * t ** (j - i) * q
            return (-1) ** j * np.exp(-t * u) * acc
        return deriv

    return ScalarFunction(value, max_order, tuple(nth(j) for j in range(1, max_order + 1)),
                          f"e_{t:g}")


def _as_params(p, t=None) -> KernelParams:
    if isinstance(p, KernelParams):
        return p
    return KernelParams(float(p), float(t))


def g_kernel(p, t: float | None = None) -> ScalarFunction:
    """``u -> alpha e_t(u) - e_t(u/alpha)``; tends to ``(1 - alpha)(t - 1/2)`` at 0+."""
    p = _as_params(p, t)
    a, tt = p.alpha, p.t

    def value(u):
        u = _check_u(u)
        near = np.maximum(u, u / a) <= _REGULAR_MAX
        reg = a * _regular(tt, u) - _regular(tt, u / a)
        direct = a * _e_value(tt, u) - _e_value(tt, u / a)
        return np.where(near, reg, direct)

    return ScalarFunction(value, 0, (), f"g_{a:g},{tt:g}")


def h_kernel(p, t: float | None = None) -> ScalarFunction:
    """``u -> e_t(u) - e_t(u/alpha)``."""
    p = _as_params(p, t)
    a, tt = p.alpha, p.t

    def value(u):
        u = _check_u(u)
        near = np.maximum(u, u / a) <= _REGULAR_MAX
        reg = (1.0 - a) / u + _regular(tt, u) - _regular(tt, u / a)
        direct = _e_value(tt, u) - _e_value(tt, u / a)
        return np.where(near, reg, direct)

    return ScalarFunction(value, 0, (), f"h_{a:g},{tt:g}")


def h_multi(a: AlphaWeights, t: float) -> ScalarFunction:
    """``u -> e_t(u) - sum_k e_t(u/alpha_k)``."""
    if not isinstance(a, AlphaWeights):
        a = AlphaWeights(tuple(a))
    if not t > 0:
        raise DomainError("h_multi needs t > 0")
    pole = 1.0 - math.fsum(a.weights)

    def value(u):
        u = _check_u(u)
        near = u / min(a.weights) <= _REGULAR_MAX
        reg = pole / u + _regular(t, u)
        direct = _e_value(t, u)
        for ak in a.weights:
            reg = reg - _regular(t, u / ak)
            direct = direct - _e_value(t, u / ak)
        return np.where(near, reg, direct)

    return ScalarFunction(value, 0, (), f"h_multi{a.weights},{t:g}")


# ---------------------------------------------------------------------------
# the floor-function measure (two weights)

def m_measure(a: AlphaWeights, t: float):
    """Distribution function ``x -> mu([0, x))`` of the signed lattice measure.

    The measure puts +1 at ``i + t`` and -1 at ``(i + t)/alpha_k`` (i >= 0).
    Only two weights are supported; with ``alpha <= beta`` the value is
    0 on (0, t), ``floor(x - t) + 1`` on [t, t/beta),
    ``floor(x - t) - floor(beta x - t)`` on [t/beta, t/alpha) and
    ``floor(x - t) - floor(alpha x - t) - floor(beta x - t) - 1`` beyond.
    """
    if not isinstance(a, AlphaWeights):
        a = AlphaWeights(tuple(a))
    if len(a) != 2:
        raise DomainError("m_measure is only available for two weights")
    if not t > 0:
        raise DomainError("m_measure needs t > 0")
    al, be = sorted(a.weights)

    def value(x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("m_measure needs x >= 0")
        fx = np.floor(x - t)
        out = np.zeros_like(x)
        out = np.where(x >= t, fx + 1, out)
        out = np.where(x >= t / be, fx - np.floor(be * x - t), out)
        out = np.where(x >= t / al, fx - np.floor(al * x - t) - np.floor(be * x - t) - 1, out)
        return out.astype(int) if out.ndim else int(out)

    return value


def laplace_of_m(a: AlphaWeights, t: float, u: float) -> float:
    """``int_t^inf e^{-ux} m(x) dx``, exact on each constancy interval of m."""
    m = m_measure(a, t)
    x_end = t + 50.0 / u
    n_i = int(math.ceil(x_end)) + 1
    jumps = [i + t for i in range(n_i)]
    for ak in a.weights:
        jumps += [(i + t) / ak for i in range(n_i) if (i + t) / ak < x_end]
    pts = np.unique(np.array([j for j in jumps if j < x_end] + [x_end]))
    mid = 0.5 * (pts[:-1] + pts[1:])
    vals = np.asarray(m(mid), dtype=float)
    pieces = vals * (np.exp(-u * pts[:-1]) - np.exp(-u * pts[1:])) / u
    return float(math.fsum(pieces))


# ---------------------------------------------------------------------------
# Gamma-ratio functions

def _log_G_alpha_t(alpha, t, lam):
    return ((1.0 - alpha) * log_gamma(t) + alpha * lam * math.log(alpha)
            + alpha * log_gamma(lam + t) - log_gamma(alpha * lam + t))


def G_alpha_t(alpha: float, t: float, lam):
    """``Gamma(t)^(1-a) a^(a lam) Gamma(lam + t)^a / Gamma(a lam + t)``, via log-Gamma."""
    KernelParams(alpha, t)
    if not t > 0:
        raise DomainError("t must be > 0")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("lambda must be >= 0")
    with np.errstate(over="ignore"):
        out = np.exp(_log_G_alpha_t(alpha, t, lam))
    return float(out) if out.ndim == 0 else out


def G_alpha(alpha: float, lam):
    """``Gamma(lam)^a / Gamma(a lam)`` for lam > 0."""
    KernelParams(alpha, 0.0)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("lambda must be > 0")
    with np.errstate(over="ignore"):
        out = np.exp(alpha * log_gamma(lam) - log_gamma(alpha * lam))
    return float(out) if out.ndim == 0 else out


def G_integral_rep(alpha: float, t: float, lam: float, tol: float = 1e-10) -> float:
    """``exp(-int_0^inf (1 - e^{-lam u}) g_{alpha,t}(u)/u du)`` by quadrature."""
    if not 0 < alpha < 1:
        raise DomainError("the integral representation needs alpha in (0, 1)")
    if lam < 0:
        raise DomainError("lambda must be >= 0")
    if lam == 0:
        return 1.0
    g = g_kernel(alpha, t)

    def integrand(u):
        return -np.expm1(-lam * u) / u * g(u)

    val = integrate(integrand, (0.0, math.inf), tol, points=(1.0,)).value
    return math.exp(-val)


def mellin_ratio(a: AlphaWeights, t: float, lam):
    """Laplace transform of the sum of the independent ``X_{alpha_k, t}``.

    Equals ``prod_k G_{alpha_k,t}(lam)
    = Gamma(t)^(n-1) d^lam Gamma(lam + t) / prod_k Gamma(alpha_k lam + t)``,
    which is 1 at lam = 0.
    """
    if not isinstance(a, AlphaWeights):
        a = AlphaWeights(tuple(a))
    if not t > 0:
        raise DomainError("t must be > 0")
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("lambda must be >= 0")
    n = len(a)
    logv = (n - 1) * log_gamma(t) + lam * math.log(a.d_alpha) + log_gamma(lam + t)
    for ak in a.weights:
        logv = logv - log_gamma(ak * lam + t)
    out = np.exp(logv)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# the P and Q quadratics

def _w(x):
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(x)


def P_poly(x, t):
    """``x (e^x-1)^2 t^2 - 2t (e^x-1)(e^x-1-x) + x (e^x+1) - 2 (e^x-1)``."""
    x = np.asarray(x, dtype=float)
    # grows like e^(2x); overflows to inf/nan past x ~ 354
    with np.errstate(over="ignore", invalid="ignore"):
        em = np.expm1(x)
        return x * em ** 2 * t ** 2 - 2 * t * em * (em - x) + x * (em + 2.0) - 2 * em


def Q_poly(x, t):
    """``x t^2 - (1 - 2xw) t - w (1 - x - 2xw)`` with ``w = 1/(e^x - 1)``."""
    x = np.asarray(x, dtype=float)
    w = _w(x)
    return x * t ** 2 - (1.0 - 2 * x * w) * t - w * (1.0 - x - 2 * x * w)


def delta_P(x):
    """Discriminant of ``t -> P(x, t)``: ``4 (e^x-1)^2 [(e^x-1)^2 - x^2 e^x]``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        em = np.expm1(x)
        return 4 * em ** 2 * (em ** 2 - x ** 2 * np.exp(x))


def delta_Q(x):
    """Discriminant of ``t -> Q(x, t)``: ``1 - 4 x^2 e^x / (e^x-1)^2``."""
    x = np.asarray(x, dtype=float)
    w = _w(x)
    return 1.0 - 4 * x * x * w * (1.0 + w)


def _p_parts(x):
    """``A = 1/x - 1/(e^x-1)`` and ``D = 1/x^2 - e^x/(e^x-1)^2``; series below 0.1."""
    x = np.asarray(x, dtype=float)
    x2 = x * x
    a_ser = 0.5 - x / 12 + x * x2 / 720 - x * x2 ** 2 / 30240 + x * x2 ** 3 / 1209600
    d_ser = 1 / 12 - x2 / 240 + x2 ** 2 / 6048 - x2 ** 3 / 172800 + x2 ** 4 / 5322240
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = _w(x)
        a_dir = 1.0 / x - w
        d_dir = 1.0 / x2 - w * (1.0 + w)
    small = x < 0.1
    return np.where(small, a_ser, a_dir), np.where(small, d_ser, d_dir)


def t_plus_P(x):
    """Larger root of ``t -> P(x, t)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("t_plus_P needs x > 0")
    a, d = _p_parts(x)
    out = a + np.sqrt(np.maximum(d, 0.0))
    return float(out) if out.ndim == 0 else out


def t_plus_Q(x):
    """Larger root of ``t -> Q(x, t)``: ``(1 - 2xw + sqrt(Delta_Q)) / (2x)`` for x >= x0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("t_plus_Q needs x > 0")
    dq = delta_Q(x)
    if np.any(dq < -64 * np.finfo(float).eps):
        raise DomainError("Delta_Q < 0: t_plus_Q only exists for x >= x0")
    w = _w(x)
    out = (1.0 - 2 * x * w + np.sqrt(np.maximum(dq, 0.0))) / (2 * x)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# constants

@dataclass(frozen=True)
class ConstantReport:
    name: str
    value: float
    achieving_x: float | None = None
    closed_form: float | None = None
    reference_values: tuple = ()

    @property
    def abs_diffs(self) -> tuple:
        return tuple(abs(self.value - p) for p in self.reference_values)

    def to_json(self) -> dict:
        out = {"name": self.name, "value": self.value, "achieving_x": self.achieving_x,
               "reference_values": list(self.reference_values), "abs_diffs": list(self.abs_diffs)}
        if self.closed_form is not None:
            out["closed_form"] = self.closed_form
        return out


T0_CLOSED_FORM = 0.5 + 1.0 / (2.0 * math.sqrt(3.0))


@lru_cache(maxsize=None)
def critical_t0() -> float:
    """``sup_{x > 0} t_plus_P(x)`` (attained in the limit x -> 0+)."""
    _, val = maximize(t_plus_P, (1e-10, 50.0))
    return val


@lru_cache(maxsize=None)
def critical_x0() -> float:
    """Positive root of ``sinh(x/2) = x``."""
    return find_root(lambda x: math.sinh(x / 2) - x, (1.0, 10.0), 1e-12)


@lru_cache(maxsize=None)
def _t1_search() -> tuple[float, float]:
    x0 = critical_x0()
    lo = x0 * (1 + 1e-12)
    return maximize(t_plus_Q, (lo, T1_CAP), 1e-12)


def critical_t1() -> float:
    """``max_{x in (x0, 60)} t_plus_Q(x)``."""
    return _t1_search()[1]


def t1_argmax() -> float:
    return _t1_search()[0]


def constants_report() -> dict:
    t0 = critical_t0()
    x0 = critical_x0()
    x1, t1 = _t1_search()
    return {
        "t0": ConstantReport("t0", t0, None, T0_CLOSED_FORM, (T0_CLOSED_FORM,)),
        "x0": ConstantReport("x0", x0, None, None, (X0_REFERENCE,)),
        "t1": ConstantReport("t1", t1, x1, None, (T1_REFERENCE_MAJ, T1_REFERENCE_HATS)),
    }


# ---------------------------------------------------------------------------
# log-Gamma Levy representation

def loggamma_levy_rep_check(t: float, lam: float, tol: float = 1e-10) -> float:
    """Deviation between the Levy-Khintchine form of ``log Gamma(lam+t)/Gamma(t)`` and log-Gamma."""
    if not t > 0 or lam < 0:
        raise DomainError("need t > 0 and lambda >= 0")
    if lam == 0:
        return 0.0
    e = e_kernel(t, max_order=0)

    def integrand(u):
        return exp_remainder(lam * u) * e(u) / u

    quad = integrate(integrand, (0.0, math.inf), tol, points=(1.0,)).value
    lhs = float(digamma(t)) * lam + quad
    rhs = float(log_gamma(lam + t) - log_gamma(t))
    return abs(lhs - rhs)
