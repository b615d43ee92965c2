"""Euler-Mellin operator calculus.

``Theta = x d/dx`` and its discrete analogue ``theta_c(g)(x) = g(x) - g(x/c)``.
Powers of Theta are formed from ordinary derivatives through second-kind
Stirling numbers; when no derivatives are available they can be taken by
central differences of ``y -> f(e^y)``.

Membership in the class M_n (``(-1)^m Theta^m k >= 0`` for ``m <= n``) is
certified along two paths: the derivative path above, and a difference path
built from compositions of ``theta_c`` over a fixed panel of ratios.  The
difference path only needs values of ``k``, so it is the authority for
kernels that do not carry derivatives.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, OrderError
from .numerics import DEFAULT_GRID, GridSpec, as_vectorized, integrate, tail_converges
from .specialfn import stirling, stirling_table

MEMBER = "member"
NONMEMBER = "nonmember"
INCONCLUSIVE = "inconclusive"

RATIO_PANEL = (0.3, 0.5, 0.7, 0.9)
FD_STEPS = (1e-2, 5e-3)
DEFAULT_TOL = 1e-9
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ScalarFunction:
    """A real function on (0, inf) with optional closed-form derivatives.

    ``derivatives[j - 1]`` is the j-th derivative, for ``j <= derivative_order``.
    Calling the object evaluates it elementwise on arrays.
    """

    eval: Callable
    derivative_order: int = 0
    derivatives: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.derivative_order < 0:
            raise ValueError("derivative_order must be >= 0")
        if len(self.derivatives) != self.derivative_order:
            raise ValueError(
                f"{self.label or 'function'}: {len(self.derivatives)} derivatives supplied "
                f"for declared order {self.derivative_order}"
            )
        object.__setattr__(self, "derivatives", tuple(self.derivatives))

    def __call__(self, x):
        return as_vectorized(self.eval)(x)

    def derivative(self, j: int, x):
        if j == 0:
            return self(x)
        if j > self.derivative_order:
            raise OrderError(f"{self.label or 'function'} has no derivative of order {j}")
        return as_vectorized(self.derivatives[j - 1])(x)

    def check_derivatives(self, probes: Sequence[float] = (0.5, 1.0, 2.0),
                          step: float = 1e-5, rtol: float = 1e-4) -> None:
        """Compare each supplied derivative with a central difference of the one below."""
        x = np.asarray(probes, dtype=float)
        for j in range(1, self.derivative_order + 1):
            fd = (self.derivative(j - 1, x + step) - self.derivative(j - 1, x - step)) / (2 * step)
            exact = self.derivative(j, x)
            bad = np.abs(fd - exact) > rtol * np.maximum(np.abs(exact), 1.0)
            if bad.any():
                raise ValueError(
                    f"{self.label or 'function'}: derivative {j} disagrees with finite "
                    f"differences at x={x[bad][0]}"
                )

    # common carriers -----------------------------------------------------

    @classmethod
    def power(cls, a: float, scale: float = 1.0, max_order: int = 12) -> "ScalarFunction":
        """``scale * x**a``."""
        def nth(j):
            coef = scale * math.prod(a - i for i in range(j))
            return lambda x: coef * np.power(x, a - j)
        return cls(nth(0), max_order, tuple(nth(j) for j in range(1, max_order + 1)),
                   f"{scale:g}*x^{a:g}")

    @classmethod
    def exponential(cls, rate: float = 1.0, scale: float = 1.0, max_order: int = 12) -> "ScalarFunction":
        """``scale * exp(-rate x)``."""
        def nth(j):
            coef = scale * (-rate) ** j
            return lambda x: coef * np.exp(-rate * np.asarray(x, dtype=float))
        return cls(nth(0), max_order, tuple(nth(j) for j in range(1, max_order + 1)),
                   f"{scale:g}*exp(-{rate:g}x)")

    @classmethod
    def constant(cls, c: float, max_order: int = 12) -> "ScalarFunction":
        def zero(x):
            return np.zeros_like(np.asarray(x, dtype=float))
        return cls(lambda x: np.full_like(np.asarray(x, dtype=float), c), max_order,
                   (zero,) * max_order, f"const {c:g}")

    @classmethod
    def logarithm(cls, max_order: int = 12) -> "ScalarFunction":
        def nth(j):
            coef = (-1) ** (j - 1) * math.factorial(j - 1)
            return lambda x: coef * np.power(np.asarray(x, dtype=float), -j)
        return cls(np.log, max_order, tuple(nth(j) for j in range(1, max_order + 1)), "log")


@dataclass(frozen=True)
class MnCertificate:
    """Outcome of an M_n membership test on a grid."""

    n: int
    verdict: str
    failed_order: int | None
    witness: float | None
    grid: GridSpec
    margin: float
    method: str = "derivative"
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.verdict not in (MEMBER, NONMEMBER, INCONCLUSIVE):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.verdict == NONMEMBER and (self.failed_order is None or self.witness is None):
            raise ValueError("a nonmember certificate needs failed_order and witness")

    @property
    def is_member(self) -> bool:
        return self.verdict == MEMBER

    def to_json(self) -> dict:
        return {
            "order": self.n,
            "verdict": self.verdict,
            "failed_order": self.failed_order,
            "witness": self.witness,
            "margin": self.margin,
            "grid": self.grid.to_dict(),
            "method": self.method,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# operators

def theta_c(f: ScalarFunction, c: float) -> ScalarFunction:
    """``x -> f(x) - f(x/c)``, carrying derivatives when ``f`` has them."""
    if not c > 0:
        raise DomainError("theta_c needs c > 0")

    def nth(j):
        return lambda x: f.derivative(j, x) - c ** (-j) * f.derivative(j, np.asarray(x) / c)

    label = f"theta_{c:g}({f.label})"
    return ScalarFunction(nth(0), f.derivative_order,
                          tuple(nth(j) for j in range(1, f.derivative_order + 1)), label)


def fd_theta(f: ScalarFunction, m: int, x, steps=FD_STEPS):
    """Theta^m f via central differences in y = ln x, Richardson-extrapolated."""
    y = np.log(np.asarray(x, dtype=float))
    binom = [math.comb(m, i) * (-1) ** i for i in range(m + 1)]

    def central(h):
        acc = np.zeros_like(y)
        for i, w in enumerate(binom):
            acc = acc + w * f(np.exp(y + (0.5 * m - i) * h))
        return acc / h ** m

    h1, h2 = steps
    d1, d2 = central(h1), central(h2)
    r = (h1 / h2) ** 2
    return (r * d2 - d1) / (r - 1.0)


def big_theta_n(f: ScalarFunction, n: int, *, fallback: bool = False) -> ScalarFunction:
    """``Theta^n f = sum_m S(n, m) x^m f^(m)``.

    With ``fallback=True`` and too few derivatives, central differences of
    ``y -> f(e^y)`` are used instead (steps 1e-2 and 5e-3 with Richardson
    extrapolation).  Otherwise missing derivatives raise OrderError.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return f
    if f.derivative_order < n:
        if not fallback:
            raise OrderError(
                f"Theta^{n} needs {n} derivatives of {f.label or 'f'}, "
                f"{f.derivative_order} available; pass fallback=True for finite differences"
            )
        return ScalarFunction(lambda x: fd_theta(f, n, x), 0, (), f"Theta^{n}[fd]({f.label})")
    coeffs = [stirling(n, m) for m in range(n + 1)]

    def ev(x):
        x = np.asarray(x, dtype=float)
        return sum(coeffs[m] * x ** m * f.derivative(m, x) for m in range(1, n + 1))

    return ScalarFunction(ev, 0, (), f"Theta^{n}({f.label})")


def scaled_derivative(f: ScalarFunction, n: int) -> ScalarFunction:
    """``x^n f^(n)`` rebuilt from ``Theta^m f`` with signed first-kind Stirling weights."""
    table = stirling_table()
    thetas = [big_theta_n(f, m) for m in range(n + 1)]
    weights = [table.signed_first(n, m) for m in range(n + 1)]

    def ev(x):
        return sum(w * th(x) for w, th in zip(weights, thetas) if w)

    return ScalarFunction(ev, 0, (), f"x^{n} D^{n}({f.label})")


# ---------------------------------------------------------------------------
# M_n certification

def _theta_powers(k: ScalarFunction, n: int, x: np.ndarray) -> list[np.ndarray]:
    """``[(-1)^m Theta^m k(x) for m = 0..n]`` from one pass over derivatives."""
    scaled = [k(x)] + [x ** j * k.derivative(j, x) for j in range(1, n + 1)]
    out = [scaled[0]]
    for m in range(1, n + 1):
        out.append((-1) ** m * sum(stirling(m, j) * scaled[j] for j in range(1, m + 1)))
    return out


def _difference_orders(k: ScalarFunction, n: int, x: np.ndarray, ratios) -> list[tuple]:
    """Per order m: (min over ratio compositions of theta_{c_1}..theta_{c_m} k, roundoff scale).

    All compositions of order m are expanded over shifts x * prod c_i^-l_i,
    so ``k`` is evaluated once per shift rather than once per composition.
    """
    r = len(ratios)
    inv = 1.0 / np.asarray(ratios, dtype=float)
    shifts = [l for l in itertools.product(range(n + 1), repeat=r) if sum(l) <= n]
    values = {l: k(x * float(np.prod(inv ** np.array(l)))) for l in shifts}
    out = []
    for m in range(1, n + 1):
        best = np.full(x.shape, np.inf)
        scale = np.zeros(x.shape)
        for j in shifts:
            if sum(j) != m:
                continue
            acc = np.zeros(x.shape)
            mag = np.zeros(x.shape)
            for l in itertools.product(*(range(ji + 1) for ji in j)):
                w = math.prod((-1) ** li * math.comb(ji, li) for ji, li in zip(j, l))
                v = values[l]
                acc += w * v
                mag += abs(w) * np.abs(v)
            take = acc < best
            best = np.where(take, acc, best)
            scale = np.where(take, mag, scale)
        out.append((best, scale))
    return out


def _first_violation(values, thresholds):
    """First order whose values dip below -threshold, with the worst point index."""
    for m, (v, thr) in enumerate(zip(values, thresholds)):
        excess = v + thr
        if np.any(excess < 0):
            return m, int(np.argmin(v / thr))
    return None, None


def is_Mn(
    k: ScalarFunction,
    n: int,
    grid: GridSpec = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    *,
    ratios: Sequence[float] = RATIO_PANEL,
    method: str = "auto",
) -> MnCertificate:
    """Certify ``(-1)^m Theta^m k >= -tol (1 + |k|)`` for ``m = 0..n`` on ``grid``.

    ``method``: ``"derivative"``, ``"difference"`` or ``"auto"`` (both when
    ``k`` carries n derivatives, difference only otherwise).

    A derivative-path violation is conclusive.  The difference path checks
    compositions of theta_c over the ratio panel; these are integrals of the
    derivative signs, so they may miss a narrow violation (not a conflict)
    but cannot be negative for a true member.  A difference-path violation
    with a clean derivative path is therefore reported as inconclusive.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if method not in ("auto", "derivative", "difference"):
        raise ValueError(f"unknown method {method!r}")
    has_derivs = k.derivative_order >= n
    if method == "derivative" and not has_derivs:
        raise OrderError(f"{k.label or 'k'} lacks {n} derivatives")
    use_der = has_derivs and method in ("auto", "derivative")
    use_diff = method == "difference" or (method == "auto")
    x = grid.values()
    k0 = k(x)
    base_thr = tol * (1.0 + np.abs(k0))
    margin = 0.0

    der_fail = der_idx = None
    der_vals = None
    if use_der:
        der_vals = _theta_powers(k, n, x)
        der_fail, der_idx = _first_violation(der_vals, [base_thr] * (n + 1))
        margin = min(margin, float(min(np.min(v) for v in der_vals)))

    diff_fail = diff_idx = None
    if use_diff:
        diff = [(k0, np.zeros_like(k0))] + _difference_orders(k, n, x, ratios)
        vals = [v for v, _ in diff]
        thrs = [base_thr + 64 * _EPS * s for _, s in diff]
        diff_fail, diff_idx = _first_violation(vals, thrs)
        margin = min(margin, float(min(np.min(v) for v in vals)))

    label = "+".join(p for p, used in (("derivative", use_der), ("difference", use_diff)) if used)
    if use_der and der_fail is not None:
        return MnCertificate(n, NONMEMBER, der_fail, float(x[der_idx]), grid, margin, label)
    if use_der and diff_fail is not None:
        return MnCertificate(
            n, INCONCLUSIVE, diff_fail, float(x[diff_idx]), grid, margin, label,
            (f"difference path fails at order {diff_fail} while all derivative signs hold",),
        )
    if diff_fail is not None:
        return MnCertificate(n, NONMEMBER, diff_fail, float(x[diff_idx]), grid, margin, label)
    return MnCertificate(n, MEMBER, None, None, grid, margin, label)


# ---------------------------------------------------------------------------
# Hadamard fractional integral

@dataclass(frozen=True)
class PointMass:
    """Unit (or ``weight``) mass at ``location``, as the measure mu(dy)."""

    location: float = 1.0
    weight: float = 1.0


def hadamard_transform(m, n: int, tol: float = 1e-12) -> ScalarFunction:
    """``x -> (1/(n-1)!) int_x^inf log^(n-1)(y/x) m(y) dy/y``.

    ``m`` is a density of mu with respect to dy (a ScalarFunction or
    callable), or a :class:`PointMass`.  The integral is evaluated as
    ``int_0^inf s^(n-1) m(x e^s) ds``.  Raises DivergenceError when the
    log-moment tail at infinity fails the doubling-truncation test.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fact = math.factorial(n - 1)
    if isinstance(m, PointMass):
        loc, w = float(m.location), float(m.weight)

        def ev_point(x):
            x = np.asarray(x, dtype=float)
            with np.errstate(divide="ignore"):
                lg = np.log(loc / x)
            return np.where(x <= loc, w * np.abs(lg) ** (n - 1) / (loc * fact), 0.0)

        return ScalarFunction(ev_point, 0, (), f"H{n}[delta_{loc:g}]")

    mv = as_vectorized(m)
    if not tail_converges(lambda y: np.log(y) ** (n - 1) * mv(y) / y, 1.0):
        raise DivergenceError(f"int_1^inf log^{n - 1}(y) m(y)/y dy diverges")

    def one(x):
        def integrand(s):
            with np.errstate(over="ignore", invalid="ignore"):
                y = x * np.exp(s)
                # the density vanishes at infinity; overflowed arguments contribute nothing
                return np.where(np.isfinite(y), s ** (n - 1) * mv(np.where(np.isfinite(y), y, 1.0)), 0.0)

        return integrate(integrand, (0.0, math.inf), tol).value / fact

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.vectorize(one, otypes=[float])(x)

    label = getattr(m, "label", "") or "m"
    return ScalarFunction(ev, 0, (), f"H{n}[{label}]")


def hadamard_invert_check(m, n: int, grid: GridSpec, tol: float = 1e-12) -> float:
    """``max |(-1)^n Theta^n H_n(x) - m(x)|`` over the grid (finite-difference Theta)."""
    H = hadamard_transform(m, n, tol)
    x = grid.values()
    recovered = (-1) ** n * fd_theta(H, n, x)
    return float(np.max(np.abs(recovered - as_vectorized(m)(x))))


# ---------------------------------------------------------------------------
# finite-order complete monotonicity

CM_STEPS = (0.01, 0.1, 1.0)


def cm_check(
    f,
    order: int,
    lambda_grid: GridSpec,
    tol: float = DEFAULT_TOL,
    *,
    steps: Sequence[float] = CM_STEPS,
) -> MnCertificate:
    """Necessary-condition check for complete monotonicity up to ``order``.

    Passes iff ``(-1)^j Delta_h^j f(lambda) >= -tol (1 + |f(lambda)|)`` for
    all ``j <= order``, grid points lambda and steps h.  A "member" verdict
    is evidence, not proof.
    """
    fv = as_vectorized(f)
    lam = lambda_grid.values()
    f0 = fv(lam)
    thr = tol * (1.0 + np.abs(f0))
    margin = 0.0
    for j in range(order + 1):
        for h in steps:
            acc = np.zeros_like(lam)
            for i in range(j + 1):
                acc += (-1) ** i * math.comb(j, i) * (f0 if i == 0 else fv(lam + i * h))
            margin = min(margin, float(acc.min()))
            bad = acc < -thr
            if bad.any():
                idx = int(np.argmin(acc / thr))
                return MnCertificate(order, NONMEMBER, j, float(lam[idx]), lambda_grid,
                                     margin, "forward-difference", (f"step {h:g}",))
    return MnCertificate(order, MEMBER, None, None, lambda_grid, margin, "forward-difference")
