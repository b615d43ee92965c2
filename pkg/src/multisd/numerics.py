"""Quadrature, Frullani integrals, root finding and scalar maximization.

Quadrature uses double-exponential rules: tanh-sinh on finite intervals and
exp-sinh on [a, inf).  Both cluster nodes doubly exponentially at the
endpoints, which is what the 1/u and log^n endpoint behaviour of the
Levy-type kernels needs.  Levels are refined by halving the step until two
successive estimates agree; otherwise the interval is split.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, DomainError, InconclusiveError, QuadratureError

_EPS = np.finfo(float).eps
_HALF_PI = 0.5 * math.pi
_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.error_estimate >= 0 or self.evaluations <= 0:
            raise ValueError("QuadResult needs error_estimate >= 0 and evaluations > 0")


@dataclass(frozen=True)
class GridSpec:
    """A strictly increasing evaluation grid on (lo, hi]."""

    lo: float
    hi: float
    points: int = 2048
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in ("log", "linear"):
            raise ValueError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")
        if not self.hi > self.lo:
            raise ValueError("GridSpec needs hi > lo")
        if self.points < 2:
            raise ValueError("GridSpec needs at least 2 points")
        if self.spacing == "log" and not self.lo > 0:
            raise ValueError("log spacing requires lo > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.points)
        return np.linspace(self.lo, self.hi, self.points)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "points": self.points, "spacing": self.spacing}


DEFAULT_GRID = GridSpec(1e-4, 1e4, 2048, "log")


def as_vectorized(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap ``f`` so it maps float arrays to float arrays of the same shape."""
    vf = np.vectorize(f, otypes=[float])

    def wrapped(x):
        x = np.asarray(x, dtype=float)
        try:
            y = np.asarray(f(x), dtype=float)
        except (TypeError, ValueError):
            return vf(x)
        if y.shape != x.shape:
            return np.broadcast_to(y, x.shape).astype(float) if y.ndim == 0 else vf(x)
        return y

    return wrapped


# ---------------------------------------------------------------------------
# double-exponential rules

def _tanh_sinh_nodes(a: float, b: float, t: np.ndarray):
    s = _HALF_PI * np.sinh(t)
    e = np.exp(-2.0 * np.abs(s))
    # distance to the nearer endpoint, kept exact near a for tiny offsets
    d = (b - a) * e / (1.0 + e)
    x = np.where(t < 0, a + d, b - d)
    sech2 = 4.0 * e / (1.0 + e) ** 2
    w = 0.5 * (b - a) * _HALF_PI * np.cosh(t) * sech2
    return x, w


def _exp_sinh_nodes(a: float, t: np.ndarray):
    s = _HALF_PI * np.sinh(t)
    ex = np.exp(s)
    return a + ex, _HALF_PI * np.cosh(t) * ex


def _de_level_sum(f, nodes, a, b, t):
    x, w = nodes(t)
    keep = (x > a) & (x < b) & (w > 0)
    if not keep.any():
        return 0.0, 0.0, 0
    x, w = x[keep], w[keep]
    y = f(x)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise QuadratureError(f"integrand not finite at x={bad!r}")
    return float(np.dot(w, y)), float(np.dot(w, np.abs(y))), int(x.size)


def _de_integrate(f, a, b, tol, rtol, max_level):
    if math.isinf(b):
        t_max = 4.5
        def nodes(t):
            return _exp_sinh_nodes(a, t)
    else:
        t_max = 4.0
        def nodes(t):
            return _tanh_sinh_nodes(a, b, t)

    h = 1.0
    t = np.arange(-math.floor(t_max), math.floor(t_max) + 1, dtype=float)
    s, sabs, n_eval = _de_level_sum(f, nodes, a, b, t)
    estimate = h * s
    abs_sum = h * sabs
    err = math.inf
    for level in range(1, max_level + 1):
        h *= 0.5
        k = np.arange(1, 2 * math.ceil(t_max / h) + 1, 2, dtype=float)
        t = np.concatenate([-k[::-1] * h, k * h])
        t = t[np.abs(t) <= t_max]
        s, sabs, n = _de_level_sum(f, nodes, a, b, t)
        n_eval += n
        new = 0.5 * estimate + h * s
        abs_sum = 0.5 * abs_sum + h * sabs
        err = abs(new - estimate)
        estimate = new
        floor = 64.0 * _EPS * abs_sum
        if level >= 3 and err <= max(tol, rtol * abs(estimate), floor):
            return estimate, max(err, floor), n_eval, True
    return estimate, err, n_eval, False


def integrate(
    f: Callable,
    domain: tuple[float, float],
    tol: float = 1e-10,
    *,
    rtol: float = 0.0,
    points: Sequence[float] = (),
    max_level: int = 9,
    max_intervals: int = 200,
) -> QuadResult:
    """Integrate ``f`` over ``domain = (a, b)``; ``b`` may be ``inf``.

    ``f`` is called on numpy arrays.  ``points`` are interior breakpoints
    (kinks, jumps) at which the domain is split up front.  Intervals whose
    estimate does not settle are bisected (the right end of a semi-infinite
    interval is split at a + max(1, |a|)) until ``max_intervals`` is hit.
    """
    a, b = map(float, domain)
    if not b > a:
        if b == a:
            return QuadResult(0.0, 0.0, 1)
        raise DomainError("integrate needs a < b")
    if math.isinf(a):
        raise DomainError("left endpoint must be finite")
    fv = as_vectorized(f)
    cuts = sorted(float(p) for p in points if a < p < b)
    stack = list(zip([a] + cuts, cuts + [b]))
    total = 0.0
    total_err = 0.0
    evals = 0
    done = 0
    scale = 0.0  # largest |estimate| seen, so rtol is judged globally near jumps
    while stack:
        lo, hi = stack.pop()
        share = tol * ((hi - lo) / (b - a) if math.isfinite(b) and math.isfinite(hi) else 0.5)
        share = max(share, rtol * scale / 16.0)
        val, err, n, ok = _de_integrate(fv, lo, hi, share, rtol, max_level)
        scale = max(scale, abs(val))
        if not ok and err <= rtol * scale / 16.0:
            ok = True
        evals += n
        if ok or (math.isfinite(hi) and hi - lo <= 64 * _EPS * max(abs(lo), abs(hi))):
            total += val
            total_err += err
            done += 1
            continue
        if done + len(stack) + 2 > max_intervals:
            raise QuadratureError(
                f"subdivision budget exhausted on [{lo}, {hi}] (last error {err:.3g})"
            )
        mid = lo + max(1.0, abs(lo)) if math.isinf(hi) else 0.5 * (lo + hi)
        stack.extend([(lo, mid), (mid, hi)])
    return QuadResult(float(total), float(total_err), max(evals, 1))


def frullani(g: Callable, c: float, tol: float = 1e-10) -> float:
    """Numerically evaluate the Frullani integral of (g(x) - g(x/c)) / x over (0, inf).

    For monotone ``g`` with finite limits this equals (g(inf) - g(0+)) ln c;
    here it is computed by quadrature, not by that formula.
    """
    if not (c > 0 and c != 1):
        raise DomainError("frullani needs c > 0, c != 1")
    gv = as_vectorized(g)

    def integrand(x):
        return (gv(x) - gv(x / c)) / x

    # the integrand lives on the scale between min(1, c) and max(1, c)
    return integrate(integrand, (0.0, math.inf), tol, points=(min(1.0, c), max(1.0, c))).value


def find_root(f: Callable[[float], float], bracket: tuple[float, float], tol: float = 1e-10) -> float:
    """Bracketed root (Brent's method) with |f(root)| <= tol."""
    a, b = map(float, bracket)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if not fa * fb < 0:
        raise BracketError(f"f({a})={fa} and f({b})={fb} do not bracket a root")
    xtol = tol
    for _ in range(6):
        root = brentq(f, a, b, xtol=xtol, rtol=4 * _EPS, maxiter=500)
        if abs(f(root)) <= tol:
            return float(root)
        xtol *= 1e-3
    return float(root)


def maximize(
    f: Callable,
    interval: tuple[float, float],
    tol: float = 1e-12,
    *,
    scan_points: int = 4096,
    spacing: str | None = None,
) -> tuple[float, float]:
    """Coarse scan followed by golden-section refinement.

    The scan is log-spaced when the interval is on the positive axis and
    linear otherwise.  Refinement runs on the two scan cells around the best
    scan point.  Returns ``(argmax, max)``.
    """
    a, b = map(float, interval)
    if not b > a:
        raise DomainError("maximize needs a non-empty interval")
    if spacing is None:
        spacing = "log" if a > 0 else "linear"
    xs = np.geomspace(a, b, scan_points) if spacing == "log" else np.linspace(a, b, scan_points)
    ys = as_vectorized(f)(xs)
    ys = np.where(np.isfinite(ys), ys, -np.inf)
    i = int(np.argmax(ys))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, scan_points - 1)]
    best_x, best_y = float(xs[i]), float(ys[i])

    def fs(x):
        return float(f(x))

    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = fs(x1), fs(x2)
    while hi - lo > max(tol, 4 * _EPS * max(abs(lo), abs(hi))):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = fs(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = fs(x2)
    for x, y in ((x1, f1), (x2, f2)):
        if y > best_y:
            best_x, best_y = float(x), float(y)
    return best_x, best_y


def tail_converges(
    integrand: Callable,
    start: float = 1.0,
    *,
    direction: str = "up",
    ratio: float = 0.9,
    consecutive: int = 3,
    burn_in: int = 16,
    max_doublings: int = 1000,
) -> bool:
    """Doubling-truncation test for convergence of a tail integral.

    Integrates over dyadic shells [s 2^j, s 2^(j+1)] (``direction="up"``,
    tail at infinity) or [s 2^-(j+1), s 2^-j] (``"down"``, tail at 0).

    Shell sizes I_j are read as a sequence in j.  Returns True early once
    ``consecutive`` ratios I_(j+1)/I_j fall below ``ratio`` after
    ``burn_in`` shells (geometric decay), or the shells vanish, and False
    once as many ratios exceed ``1/ratio`` (geometric growth).  At the end
    of the scan (or once a shell is negligible against the largest one) the
    decay between the middle and last shell decides:
    I_J / I_(J/2) <= 1/8 (like j^-3 or faster) is convergent, >= 0.45 (no
    faster than harmonic) is divergent, and anything in between raises
    InconclusiveError.
    """
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    fv = as_vectorized(integrand)
    shells = []
    streak = grow = 0
    for j in range(max_doublings):
        if direction == "up":
            lo, hi = start * 2.0 ** j, start * 2.0 ** (j + 1)
        else:
            lo, hi = start * 2.0 ** -(j + 1), start * 2.0 ** -j
        if not (math.isfinite(hi) and lo > 0):
            break
        # shells integrated in u = ln(y / lo) so every shell has unit scale
        try:
            shell = abs(integrate(lambda u, lo=lo: fv(lo * np.exp(u)) * lo * np.exp(u),
                                  (0.0, math.log(2.0)), tol=0.0, rtol=1e-9).value)
        except QuadratureError as exc:
            raise InconclusiveError(f"shell [{lo:.3g}, {hi:.3g}] did not integrate: {exc}") from exc
        if shells and shell < 1e-15 * max(shells):
            shells.append(shell)
            break
        if shells:
            prev = shells[-1]
            if prev == 0.0:
                streak = streak + 1 if shell == 0.0 else 0
            else:
                streak = streak + 1 if shell / prev < ratio else 0
                grow = grow + 1 if shell * ratio > prev else 0
            if streak >= consecutive and (j >= burn_in or shell == 0.0):
                return True
            if grow >= consecutive and j >= burn_in:
                return False
        shells.append(shell)
    late, mid = shells[-1], shells[len(shells) // 2]
    if late <= 0.125 * mid:
        return True
    if late >= 0.45 * mid:
        return False
    raise InconclusiveError("tail decays too slowly to decide convergence by truncation")
