"""Log-Gamma, digamma, q-Gamma and Stirling numbers.

Everything here is implemented in-tree so that results are bit-reproducible
and independent of the platform libm ``lgamma``.  ``log_gamma`` and
``digamma`` accept scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286061
_HALF_LOG_2PI = 0.91893853320467274178

# Bernoulli numbers B_2 .. B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def _zeta_minus_one(k: int) -> float:
    """zeta(k) - 1 for integer k >= 2 by Euler-Maclaurin summation."""
    n_cut = 12
    s = math.fsum(n ** -float(k) for n in range(2, n_cut))
    s += n_cut ** (1.0 - k) / (k - 1) + 0.5 * n_cut ** -float(k)
    rising = float(k)  # k (k+1) ... (k+2j-2)
    for j, b in enumerate(_BERNOULLI, start=1):
        s += b / math.factorial(2 * j) * rising * n_cut ** (-k - 2 * j + 1.0)
        rising *= (k + 2 * j - 1) * (k + 2 * j)
    return s


# lnGamma(2+z) = (1-gamma) z + sum_{k>=2} (-1)^k (zeta(k)-1) z^k / k, |z| <= 1/2
_LG2_COEFFS = np.array(
    [0.0, 1.0 - EULER_GAMMA]
    + [(-1.0) ** k * _zeta_minus_one(k) / k for k in range(2, 40)]
)


def _lg2_series(z: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(z)
    for c in _LG2_COEFFS[:0:-1]:
        acc = (acc + c) * z
    return acc


def _lg_stirling(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv * (1 / 12 + inv2 * (-1 / 360 + inv2 * (1 / 1260 + inv2 * (
        -1 / 1680 + inv2 * (1 / 1188 + inv2 * (-691 / 360360 + inv2 / 156))))))
    return (x - 0.5) * np.log(x) - x + _HALF_LOG_2PI + series


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def log_gamma(x):
    """Natural log of the Gamma function for x > 0.

    Uses a Taylor series of ln Gamma about 2 on [1.5, 2.5), the functional
    equation to shift into that window from below 10, and the Stirling
    series from 10 upward.
    """
    arr, scalar = _as_array(x)
    if not np.all(arr > 0) or np.any(np.isnan(arr)):
        raise DomainError("log_gamma requires x > 0")
    out = np.empty_like(arr)

    big = arr >= 10.0
    out[big] = _lg_stirling(arr[big])

    mid = ~big
    xm = arr[mid]
    corr = np.zeros_like(xm)
    # shift down: lnG(x) = lnG(x-1) + ln(x-1)
    prod = np.ones_like(xm)
    y = xm.copy()
    for _ in range(8):
        m = y >= 2.5
        if not m.any():
            break
        y[m] -= 1.0
        prod[m] *= y[m]
    corr += np.log(prod)
    # shift up: lnG(x) = lnG(x+1) - ln x
    low = y < 1.5
    while low.any():
        corr[low] -= np.log(y[low])
        y[low] += 1.0
        low = y < 1.5
    out[mid] = _lg2_series(y - 2.0) + corr
    return float(out) if scalar else out


def digamma(t):
    """Digamma psi(t) = Gamma'(t)/Gamma(t) for t > 0."""
    arr, scalar = _as_array(t)
    if not np.all(arr > 0) or np.any(np.isnan(arr)):
        raise DomainError("digamma requires t > 0")
    x = arr.copy()
    first = np.zeros_like(x)
    first_lo = np.zeros_like(x)
    rest = np.zeros_like(x)
    m = x < 8.0
    first[m], first_lo[m] = _reciprocal_dd(x[m])
    x[m] += 1.0
    for _ in range(8):
        m = x < 8.0
        if not m.any():
            break
        rest[m] += 1.0 / x[m]
        x[m] += 1.0
    inv2 = 1.0 / (x * x)
    asym = np.log(x) - 0.5 / x - inv2 * (1 / 12 - inv2 * (1 / 120 - inv2 * (
        1 / 252 - inv2 * (1 / 240 - inv2 * (1 / 132 - inv2 * (691 / 32760 - inv2 / 12))))))
    out = ((asym - rest) - first_lo) - first
    return float(out) if scalar else out


def _split(a: np.ndarray):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


def _reciprocal_dd(t: np.ndarray):
    """1/t as an unevaluated sum hi + lo (Dekker); keeps psi(t) near t=0 within half an ulp."""
    hi = 1.0 / t
    p = hi * t
    ah, al = _split(hi)
    bh, bl = _split(t)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return hi, ((1.0 - p) - err) / t


def exp_remainder(x):
    """``e^{-x} - 1 + x`` without cancellation for small ``|x|``."""
    x_in = x
    x = np.asarray(x, dtype=float)
    out = np.atleast_1d(np.expm1(-x) + x)
    x = np.atleast_1d(x)
    small = np.abs(x) < 1.0
    if np.any(small):
        xs = x[small]
        # alternating Taylor tail x^2/2 - x^3/6 + ...; 1/22! is below 1e-21
        term = xs * xs / 2.0
        acc = term.copy()
        for j in range(3, 23):
            term = -term * xs / j
            acc += term
        out[small] = acc
    return out.reshape(np.shape(x_in)) if np.ndim(x_in) else float(out[0])


def q_gamma(x: float, q: float, *, tail_tol: float = 1e-16, max_terms: int = 10_000_000) -> float:
    """q-Gamma function by its infinite product, for 0 < q < 1 or q > 1.

    The product is summed in log space and stopped once the geometric bound
    on the remaining tail of log-factors drops below ``tail_tol``.
    """
    if not (x > 0 and q > 0 and q != 1 and math.isfinite(x) and math.isfinite(q)):
        raise DomainError("q_gamma requires x > 0, q > 0, q != 1")
    if q < 1:
        r = q
        log_pref = (1.0 - x) * math.log1p(-q)
    else:
        r = 1.0 / q
        log_pref = (1.0 - x) * math.log(q - 1.0) + 0.5 * x * (x - 1.0) * math.log(q)
    log_r = math.log(r)
    total = 0.0
    start = 0
    chunk = 4096
    while start < max_terms:
        j = np.arange(start, start + chunk, dtype=float)
        terms = np.log1p(-np.exp((j + 1.0) * log_r)) - np.log1p(-np.exp((j + x) * log_r))
        total += math.fsum(terms)
        # |log factor_j| ~ r^j |r^x - r| / (1-r^j...), geometric with ratio r
        tail = abs(terms[-1]) * r / (1.0 - r)
        if tail < tail_tol:
            return math.exp(log_pref + total)
        start += chunk
    raise ConvergenceError(f"q_gamma product did not converge within {max_terms} terms")


@dataclass(frozen=True)
class StirlingTable:
    """Exact Stirling numbers up to ``max_order``.

    ``first_kind[n][m]`` is the unsigned number of permutations of n elements
    with m cycles; ``second_kind[n][m]`` counts partitions of n elements into
    m blocks.
    """

    max_order: int
    first_kind: tuple
    second_kind: tuple

    @classmethod
    def build(cls, max_order: int = 30) -> "StirlingTable":
        first = [[0] * (max_order + 1) for _ in range(max_order + 1)]
        second = [[0] * (max_order + 1) for _ in range(max_order + 1)]
        first[0][0] = second[0][0] = 1
        for n in range(1, max_order + 1):
            for m in range(1, n + 1):
                first[n][m] = (n - 1) * first[n - 1][m] + first[n - 1][m - 1]
                second[n][m] = m * second[n - 1][m] + second[n - 1][m - 1]
        return cls(max_order, tuple(map(tuple, first)), tuple(map(tuple, second)))

    def __call__(self, n: int, m: int, kind: str = "second") -> int:
        if not (0 <= m <= n <= self.max_order):
            raise IndexError(f"Stirling index ({n}, {m}) outside table of order {self.max_order}")
        if kind == "first":
            return self.first_kind[n][m]
        if kind == "second":
            return self.second_kind[n][m]
        raise ValueError(f"kind must be 'first' or 'second', got {kind!r}")

    def signed_first(self, n: int, m: int) -> int:
        return (-1) ** (n - m) * self(n, m, "first")


@lru_cache(maxsize=None)
def stirling_table(max_order: int = 30) -> StirlingTable:
    return StirlingTable.build(max_order)


def stirling(n: int, m: int, kind: str = "second") -> int:
    """Stirling number of the given kind (first kind unsigned)."""
    return stirling_table()(n, m, kind)
