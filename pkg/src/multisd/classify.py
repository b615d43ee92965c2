"""SD_n classification of infinitely divisible laws from Levy characteristics.

A law with Levy measure ``Pi(dx) = k(x)/x dx`` is n-times selfdecomposable
when ``k`` lies in M_{n+1}; the measure ``mu`` of the order-(n+1) Hadamard
representation of ``k`` must then satisfy a log-moment condition at
infinity.  The classifier walks n = 0, 1, ... and stops at the first order
where either test fails.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError, InconclusiveError, RegimeError
from .kernels import AlphaWeights, e_kernel, m_measure
from .numerics import DEFAULT_GRID, GridSpec, as_vectorized, tail_converges
from .specialfn import digamma
from .theta import (DEFAULT_TOL, INCONCLUSIVE, MEMBER, MnCertificate, ScalarFunction,
                    big_theta_n, cm_check, is_Mn)

SUBORDINATOR = "subordinator"
LAPLACE_EXPONENT = "laplace_exponent"
DEFAULT_NMAX = 8
SD_INFINITY_ORDER = 10


@dataclass(frozen=True)
class LevyTriplet:
    kind: str
    drift: float
    gaussian: float
    k_density: ScalarFunction
    label: str = ""

    def __post_init__(self):
        if self.kind not in (SUBORDINATOR, LAPLACE_EXPONENT):
            raise DomainError(f"unknown triplet kind {self.kind!r}")
        if self.kind == SUBORDINATOR and (self.drift < 0 or self.gaussian != 0):
            raise DomainError("a subordinator needs drift >= 0 and no Gaussian part")
        if self.gaussian < 0:
            raise DomainError("gaussian coefficient must be >= 0")

    @property
    def l(self) -> int:
        return 1 if self.kind == SUBORDINATOR else 2

    def validate(self, grid: GridSpec = DEFAULT_GRID) -> None:
        """Check ``k >= 0`` on the grid and the Levy-measure integrability."""
        k = self.k_density
        if np.any(k(grid.values()) < 0):
            raise DomainError(f"{self.label or 'k'} is negative on the probe grid")
        if not _levy_integrable(k, self.l):
            raise DomainError(f"{self.label or 'k'} violates the Levy integrability condition")


def _levy_integrable(k: ScalarFunction, l: int) -> bool:
    """``int (x^l ^ 1) k(x)/x dx < inf`` by doubling truncations on both tails."""
    kv = as_vectorized(k)
    low = tail_converges(lambda x: x ** (l - 1) * kv(x), 1.0, direction="down")
    high = tail_converges(lambda x: kv(x) / x, 1.0, direction="up")
    return low and high


# ---------------------------------------------------------------------------
# integrability weights

def a_nl(n: int, l: int):
    """``a_{n,l}(y) = (1/n!) int_0^y (x^l ^ 1) log^n(y/x) dx/x``.

    Equals ``y^l / l^(n+1)`` for y < 1.  For y >= 1 the incomplete-Gamma
    part ``y^l int_{log y}^inf z^n e^{-lz} dz / n!`` is a finite sum for
    integer n, giving ``L^(n+1)/(n+1)! + sum_{j<=n} (l L)^j/j! / l^(n+1)``
    with ``L = log y``.
    """
    if n < 0 or l < 1:
        raise ValueError("need n >= 0 and l >= 1")
    norm = float(l) ** (n + 1)

    def value(y):
        y = np.asarray(y, dtype=float)
        L = np.log(np.maximum(y, 1.0))
        poly = sum((l * L) ** j / math.factorial(j) for j in range(n + 1))
        upper = L ** (n + 1) / math.factorial(n + 1) + poly / norm
        with np.errstate(over="ignore"):
            return np.where(y < 1, np.minimum(y, 1.0) ** l / norm, upper)

    return value


def check_log_integrability(density, n: int, l: int = 1) -> bool:
    """Whether ``int_0^inf a_{n,l}(y) rho(y) dy`` converges.

    ``rho`` is the density of ``mu(dy)/y`` with respect to dy.  Both tails
    are tested by doubling truncations (geometric shell decay accepts, no
    faster than harmonic rejects); InconclusiveError in between.
    """
    if l not in (1, 2):
        raise ValueError("l must be 1 or 2")
    rho = as_vectorized(density)
    a = a_nl(n, l)

    def integrand(y):
        return a(y) * rho(y)

    high = tail_converges(integrand, 1.0, direction="up")
    low = tail_converges(integrand, 1.0, direction="down")
    return high and low


def a_psi_sdn(n: int):
    """``(u 1[0<u<=1] + log^(n+1)(u) 1[u>1]) / (n+1)!``, jump at u = 1 kept as printed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    fact = math.factorial(n + 1)

    def value(u):
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0):
            raise DomainError("a_psi needs u > 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(u <= 1, u, np.log(np.maximum(u, 1.0)) ** (n + 1)) / fact
        return float(out) if out.ndim == 0 else out

    return value


def chi_h(h_prime_at_x0: float, x0: float, h):
    """``x0 h'(x0) u`` for u < x0 and ``h(u) - h(x0) + x0 h'(x0)`` for u >= x0."""
    if x0 < 0:
        raise DomainError("x0 must be >= 0")
    hv = as_vectorized(h)
    slope = x0 * h_prime_at_x0
    h0 = float(hv(np.array([x0]))[0])

    def value(u):
        u = np.asarray(u, dtype=float)
        out = np.where(u < x0, slope * u, hv(u) - h0 + slope)
        return float(out) if out.ndim == 0 else out

    return value


def bondesson_eta(a: AlphaWeights, t: float, grid: GridSpec | None = None):
    """``eta = m/(1 + t)`` on a grid of x in [0, 200]; returns ``(eta, max eta)``."""
    if t < 1:
        raise RegimeError("the eta bound is only established for t >= 1")
    grid = grid or GridSpec(0.0, 200.0, 20001, "linear")
    eta = np.asarray(m_measure(a, t)(grid.values()), dtype=float) / (1.0 + t)
    return eta, float(eta.max())


def sd_infinity_surrogate(k, order: int = SD_INFINITY_ORDER,
                          grid: GridSpec = DEFAULT_GRID, tol: float = DEFAULT_TOL) -> MnCertificate:
    """Finite-order complete-monotonicity check of ``y -> k(e^y)`` on ``y = ln(grid)``."""
    kv = as_vectorized(k)
    ygrid = GridSpec(math.log(grid.lo), math.log(grid.hi), grid.points, "linear")
    return cm_check(lambda y: kv(np.exp(y)), order, ygrid, tol)


# ---------------------------------------------------------------------------
# classifier

@dataclass(frozen=True)
class SdVerdict:
    kind: str
    max_verified_n: int
    per_order: tuple
    integrability_ok: tuple
    sd_infinity_evidence: MnCertificate | None
    notes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for m, cert in enumerate(self.per_order):
            if cert.verdict != MEMBER and self.max_verified_n >= m:
                raise ValueError("order verdicts and max_verified_n disagree")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "max_verified_n": self.max_verified_n,
            "orders": [
                {"n": m, "verdict": c.verdict, "failed_order": c.failed_order,
                 "witness": c.witness, "margin": c.margin}
                for m, c in enumerate(self.per_order)
            ],
            "integrability": list(self.integrability_ok),
            "sd_infinity": None if self.sd_infinity_evidence is None
            else self.sd_infinity_evidence.verdict,
            "notes": list(self.notes),
        }


def _order_integrable(tr: LevyTriplet, n: int) -> bool:
    """Integrability of the order-(n+1) Hadamard measure of k.

    With n+1 derivatives this integrates ``a_{n,l}`` against
    ``rho = (-1)^(n+1) Theta^(n+1) k / y``.  Without them the same quantity
    is computed in its Fubini-equivalent form ``int (x^l ^ 1) k(x)/x dx``.
    """
    k = tr.k_density
    if k.derivative_order >= n + 1:
        th = big_theta_n(k, n + 1)
        sign = (-1) ** (n + 1)
        return check_log_integrability(lambda y: sign * th(y) / y, n, tr.l)
    return _levy_integrable(k, tr.l)


def classify_sd(tr: LevyTriplet, n_max: int = DEFAULT_NMAX, grid: GridSpec = DEFAULT_GRID,
                tol: float = DEFAULT_TOL, *, sd_infinity_order: int = SD_INFINITY_ORDER) -> SdVerdict:
    """Largest n <= n_max for which SD_n is verified on the grid.

    SD_n requires ``k`` in M_{n+1} and integrability of the associated
    Hadamard measure.  The walk stops at the first order where membership
    is refuted or undecided, or integrability fails.
    """
    per_order, integ, notes = [], [], []
    best = -1
    for n in range(n_max + 1):
        cert = is_Mn(tr.k_density, n + 1, grid, tol)
        per_order.append(cert)
        if cert.verdict != MEMBER:
            if cert.verdict == INCONCLUSIVE:
                notes.append(f"order {n}: membership undecided ({'; '.join(cert.notes)})")
            break
        try:
            ok = _order_integrable(tr, n)
        except InconclusiveError as exc:
            notes.append(f"order {n}: integrability undecided ({exc})")
            ok = False
        integ.append(bool(ok))
        if not ok:
            break
        best = n
    sdi = sd_infinity_surrogate(tr.k_density, sd_infinity_order, grid, tol) if sd_infinity_order else None
    return SdVerdict(tr.kind, best, tuple(per_order), tuple(integ), sdi, tuple(notes))


# ---------------------------------------------------------------------------
# built-in triplets

def gamma_triplet(shape: float = 1.0) -> LevyTriplet:
    """Gamma(shape) law: ``k(x) = shape e^{-x}``."""
    if not shape > 0:
        raise DomainError("shape must be > 0")
    return LevyTriplet(SUBORDINATOR, 0.0, 0.0, ScalarFunction.exponential(1.0, shape), f"gamma({shape:g})")


def stable_triplet(alpha: float) -> LevyTriplet:
    """Positive alpha-stable law: ``k(x) = alpha x^-alpha / Gamma(1 - alpha)``."""
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    scale = alpha / float(gamma_fn(1.0 - alpha))
    return LevyTriplet(SUBORDINATOR, 0.0, 0.0, ScalarFunction.power(-alpha, scale), f"stable({alpha:g})")


def loggamma_triplet(t: float) -> LevyTriplet:
    """Law of ``log G_t`` (Laplace exponent side): ``k = e_t``, drift ``digamma(t)``."""
    if not t > 0:
        raise DomainError("t must be > 0")
    return LevyTriplet(LAPLACE_EXPONENT, float(digamma(t)), 0.0, e_kernel(t), f"loggamma({t:g})")


def table_density(path) -> ScalarFunction:
    """k from a two-column CSV (x, k), interpolated linearly in (ln x, ln k).

    Outside the table the end segments are extended (power-law tails).
    Only values are available, so membership uses the difference path.
    """
    xs, ks = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, k = float(row[0]), float(row[1])
            except ValueError:
                continue  # header
            xs.append(x)
            ks.append(k)
    x = np.asarray(xs)
    k = np.asarray(ks)
    order = np.argsort(x)
    x, k = x[order], k[order]
    if x.size < 2 or np.any(x <= 0) or np.any(k <= 0) or np.any(np.diff(x) <= 0):
        raise DomainError("table needs >= 2 rows with distinct x > 0 and k > 0")
    lx, lk = np.log(x), np.log(k)
    s_lo = (lk[1] - lk[0]) / (lx[1] - lx[0])
    s_hi = (lk[-1] - lk[-2]) / (lx[-1] - lx[-2])

    def value(u):
        lu = np.log(np.asarray(u, dtype=float))
        out = np.interp(lu, lx, lk)
        out = np.where(lu < lx[0], lk[0] + s_lo * (lu - lx[0]), out)
        out = np.where(lu > lx[-1], lk[-1] + s_hi * (lu - lx[-1]), out)
        return np.exp(out)

    return ScalarFunction(value, 0, (), f"table({Path(path).name})")


BUILTIN_DENSITIES = {
    "gamma": lambda params: gamma_triplet(float(params.get("shape", 1.0))),
    "loggamma": lambda params: loggamma_triplet(float(params["t"])),
    "stable": lambda params: stable_triplet(float(params["alpha"])),
}


def triplet_from_spec(spec: dict, base_dir: str | Path = ".") -> LevyTriplet:
    """Build a triplet from ``{kind, drift, gaussian, density: {name, params} | {table}}``."""
    try:
        dens = spec["density"]
    except KeyError:
        raise DomainError("triplet spec needs a 'density' entry") from None
    if "table" in dens:
        path = Path(dens["table"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        k = table_density(path)
        return LevyTriplet(spec.get("kind", SUBORDINATOR), float(spec.get("drift", 0.0)),
                           float(spec.get("gaussian", 0.0)), k, k.label)
    name = dens.get("name")
    if name not in BUILTIN_DENSITIES:
        raise DomainError(f"unknown density {name!r}; choose from {sorted(BUILTIN_DENSITIES)} or a table")
    base = BUILTIN_DENSITIES[name](dens.get("params", {}))
    kind = spec.get("kind", base.kind)
    drift = float(spec.get("drift", base.drift))
    gaussian = float(spec.get("gaussian", base.gaussian))
    return LevyTriplet(kind, drift, gaussian, base.k_density, base.label)


def load_triplet(path) -> LevyTriplet:
    path = Path(path)
    with open(path) as fh:
        spec = json.load(fh)
    return triplet_from_spec(spec, path.parent)
