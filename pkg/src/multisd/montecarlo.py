"""Samplers for Gamma and positive stable laws and Monte Carlo identity checks.

Every check compares an empirical transform against its closed form.
Moment checks report z-scores built from sample standard errors.  Laws that
agree only in distribution are compared with a two-sample Kolmogorov-Smirnov
test.
"""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import kolmogorov

from .errors import DomainError
from .kernels import AlphaWeights, mellin_ratio
from .specialfn import log_gamma

DEFAULT_SEED = 42
DEFAULT_SAMPLES = 100_000
KS_THRESHOLD = 1e-3
Z_THRESHOLD = 4.0
SKEW_WARN = 25.0


class MomentWarning(UserWarning):
    """Transformed samples look too heavy-tailed for a reliable standard error."""


# ---------------------------------------------------------------------------
# random streams

@dataclass(frozen=True)
class RngStream:
    """Reproducible PCG64 stream keyed by ``(seed, stream_id)``.

    ``spawn`` derives child streams through the SeedSequence spawn key, so
    children of distinct ids are independent by construction.
    """

    seed: int = DEFAULT_SEED
    stream_id: int = 0
    path: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if int(self.stream_id) < 0:
            raise DomainError("stream_id must be >= 0")

    def seed_sequence(self) -> np.random.SeedSequence:
        key = (int(self.stream_id),) + tuple(int(p) for p in self.path)
        return np.random.SeedSequence(int(self.seed), spawn_key=key)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def spawn(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, self.path + (int(k),))


def _streams(rng, k: int) -> list[np.random.Generator]:
    """``k`` independent generators derived from ``rng``."""
    if rng is None:
        rng = RngStream()
    if isinstance(rng, (int, np.integer)):
        rng = RngStream(int(rng))
    if isinstance(rng, RngStream):
        return [rng.spawn(i).generator() for i in range(k)]
    if isinstance(rng, np.random.Generator):
        return list(rng.spawn(k))
    raise TypeError(f"unsupported rng {type(rng).__name__}")


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        rng = RngStream()
    if isinstance(rng, (int, np.integer)):
        rng = RngStream(int(rng))
    return rng.generator()


def _open_uniform(gen: np.random.Generator, n: int) -> np.ndarray:
    # midpoints of a 2^53 lattice, so never exactly 0 or 1
    return (gen.integers(0, 2 ** 53, size=n).astype(float) + 0.5) * 2.0 ** -53


# ---------------------------------------------------------------------------
# summaries

@dataclass(frozen=True)
class SampleStats:
    estimate: float
    std_error: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("need at least two samples")
        object.__setattr__(self, "estimate", float(self.estimate))
        object.__setattr__(self, "std_error", float(self.std_error))

    def z(self, target: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.estimate == target else math.copysign(math.inf, self.estimate - target)
        return (self.estimate - target) / self.std_error


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n1: int
    n2: int

    @property
    def passed(self) -> bool:
        return self.p_value > KS_THRESHOLD

    def to_json(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "n1": self.n1, "n2": self.n2}


@dataclass
class Moments:
    """Running count, mean and centred sum of squares with an associative merge."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values) -> "Moments":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls()
        mu = float(np.mean(v))
        return cls(int(v.size), mu, float(np.sum((v - mu) ** 2)))

    def merge(self, other: "Moments") -> "Moments":
        n = self.n + other.n
        if n == 0:
            return Moments()
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    def stats(self) -> SampleStats:
        if self.n < 2:
            raise DomainError("need at least two samples")
        sd = math.sqrt(self.m2 / (self.n - 1))
        return SampleStats(self.mean, sd / math.sqrt(self.n), self.n)


def summarize(values) -> SampleStats:
    """Mean with standard error ``sample-std / sqrt(n)``."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise DomainError("need at least two samples")
    if np.all(v == v[0]):
        return SampleStats(v[0], 0.0, v.size)
    sd = float(np.std(v, ddof=1))
    if sd > 0:
        skew = float(np.mean(((v - v.mean()) / sd) ** 3))
        if abs(skew) > SKEW_WARN:
            warnings.warn(f"sample skewness {skew:.3g} of transformed values; the moment may not exist",
                          MomentWarning, stacklevel=3)
    return SampleStats(float(np.mean(v)), sd / math.sqrt(v.size), v.size)


def empirical_mellin(samples, lam: float) -> SampleStats:
    """Mean and standard error of ``X^lam``."""
    x = np.asarray(samples, dtype=float)
    if lam == 0:
        return SampleStats(1.0, 0.0, x.size)
    with np.errstate(divide="ignore", over="ignore"):
        return summarize(np.power(x, lam))


def empirical_laplace(samples, lam: float) -> SampleStats:
    """Mean and standard error of ``exp(-lam X)``."""
    x = np.asarray(samples, dtype=float)
    with np.errstate(over="ignore"):
        return summarize(np.exp(-lam * x))


def parallel_stats(draw: Callable[[np.random.Generator, int], np.ndarray], n: int, rng=None,
                   streams: int = 4, workers: int | None = None) -> SampleStats:
    """Summarize ``draw`` over ``streams`` independent sub-streams.

    Each stream draws its share of ``n`` values.  Partial moments are merged in
    stream order, so the result does not depend on the thread schedule.
    """
    gens = _streams(rng, streams)
    sizes = [n // streams + (1 if i < n % streams else 0) for i in range(streams)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda gs: Moments.of(draw(gs[0], gs[1])), zip(gens, sizes)))
    total = Moments()
    for p in parts:
        total = total.merge(p)
    return total.stats()


# ---------------------------------------------------------------------------
# samplers

def _gamma_ge1(t: float, n: int, gen: np.random.Generator) -> np.ndarray:
    # Marsaglia-Tsang squeeze/rejection
    d = t - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = int((n - filled) * 1.05) + 16
        x = gen.standard_normal(m)
        v = (1.0 + c * x) ** 3
        u = _open_uniform(gen, m)
        pos = v > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            logv = np.where(pos, np.log(np.where(pos, v, 1.0)), -np.inf)
        x2 = x * x
        accept = pos & ((u < 1.0 - 0.0331 * x2 * x2) | (np.log(u) < 0.5 * x2 + d * (1.0 - v + logv)))
        got = (d * v)[accept][: n - filled]
        out[filled:filled + got.size] = got
        filled += got.size
    return out


def sample_gamma(t: float, n: int, rng=None) -> np.ndarray:
    """I.i.d. standard Gamma(t) samples, density ``x^(t-1) e^-x / Gamma(t)``."""
    if not t > 0:
        raise DomainError("shape t must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    gen = _generator(rng)
    if t >= 1.0:
        return _gamma_ge1(t, n, gen)
    g = _gamma_ge1(t + 1.0, n, gen)
    u = _open_uniform(gen, n)
    return g * np.exp(np.log(u) / t)


def sample_positive_stable(alpha: float, n: int, rng=None) -> np.ndarray:
    """I.i.d. positive stable samples with ``E exp(-lam S) = exp(-lam^alpha)``.

    Kanter's representation: with U uniform on (0, 1) and E standard
    exponential,
    ``S = sin(a pi U) sin((1-a) pi U)^((1-a)/a) / (sin(pi U)^(1/a) E^((1-a)/a))``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    if n < 1:
        raise DomainError("n must be >= 1")
    gen = _generator(rng)
    u = _open_uniform(gen, n) * math.pi
    e = gen.standard_exponential(n)
    r = (1.0 - alpha) / alpha
    logs = (np.log(np.sin(alpha * u)) + r * np.log(np.sin((1.0 - alpha) * u))
            - np.log(np.sin(u)) / alpha - r * np.log(e))
    return np.exp(logs)


def dump_samples(samples, path) -> Path:
    """Write ``index,value`` CSV with 15 significant digits."""
    p = Path(path)
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in enumerate(np.asarray(samples, dtype=float)):
            w.writerow([i, f"{v:.15g}"])
    return p


# ---------------------------------------------------------------------------
# two-sample Kolmogorov-Smirnov

def ks_2samp(x, y) -> KsResult:
    """Sup-distance of the empirical CDFs with the asymptotic p-value.

    The p-value uses the Kolmogorov limit law evaluated at
    ``(sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D`` with ``ne = n1 n2 / (n1 + n2)``.
    """
    a = np.sort(np.asarray(x, dtype=float).ravel())
    b = np.sort(np.asarray(y, dtype=float).ravel())
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise DomainError("both samples must be non-empty")
    pts = np.concatenate([a, b])
    d = float(np.max(np.abs(np.searchsorted(a, pts, "right") / n1 - np.searchsorted(b, pts, "right") / n2)))
    ne = n1 * n2 / (n1 + n2)
    sq = math.sqrt(ne)
    p = float(np.clip(kolmogorov((sq + 0.12 + 0.11 / sq) * d), 0.0, 1.0))
    return KsResult(d, p, n1, n2)


# ---------------------------------------------------------------------------
# verification reports

@dataclass
class LambdaCheck:
    lam: float
    empirical: float
    se: float
    analytic: float
    z: float

    def to_json(self) -> dict:
        return {"lambda": self.lam, "empirical": self.empirical, "se": self.se,
                "analytic": self.analytic, "z": self.z}


@dataclass
class VerificationReport:
    identity: str
    params: dict
    per_lambda: list = field(default_factory=list)
    ks: KsResult | None = None
    passed: bool = False

    def to_json(self) -> dict:
        out = {"identity": self.identity, "params": dict(self.params),
               "per_lambda": [c.to_json() for c in self.per_lambda], "pass": bool(self.passed)}
        if self.ks is not None:
            out["ks"] = self.ks.to_json()
        return out


def moment_report(identity, params, rows) -> VerificationReport:
    checks = [LambdaCheck(float(lam), s.estimate, s.std_error, float(ref), s.z(ref)) for lam, s, ref in rows]
    ok = all(abs(c.z) < Z_THRESHOLD for c in checks)
    return VerificationReport(identity, params, checks, None, ok)


def verify_gordon(p: int, t: float, n: int = DEFAULT_SAMPLES, rng=None, *,
                  t_scale: float = 1.0) -> KsResult:
    """KS test of ``G_{pt}/p`` against ``(prod_{k<p} G_{t+k/p})^(1/p)``.

    ``t_scale`` multiplies ``t`` on the left-hand side only; values other
    than one give a negative control.
    """
    if int(p) != p or p < 2:
        raise DomainError("p must be an integer >= 2")
    if not t > 0:
        raise DomainError("t must be > 0")
    p = int(p)
    gens = _streams(rng, p + 1)
    left = sample_gamma(p * t * t_scale, n, gens[0]) / p
    logs = np.zeros(n)
    for k in range(p):
        logs += np.log(sample_gamma(t + k / p, n, gens[k + 1]))
    right = np.exp(logs / p)
    return ks_2samp(left, right)


def verify_kanter_mellin(alpha: float, lam_grid: Sequence[float], n: int = DEFAULT_SAMPLES,
                         rng=None) -> list[tuple[float, SampleStats, float]]:
    """``E S^(-alpha lam)`` against ``Gamma(1+lam)/Gamma(1+alpha lam)``."""
    lam_grid = [float(l) for l in lam_grid]
    if any(l <= -1.0 for l in lam_grid):
        raise DomainError("lambda must be > -1")
    s = sample_positive_stable(alpha, n, rng)
    out = []
    for lam in lam_grid:
        ref = float(np.exp(log_gamma(1.0 + lam) - log_gamma(1.0 + alpha * lam)))
        out.append((lam, empirical_mellin(s, -alpha * lam), ref))
    return out


def verify_stable_mellin(alpha: float, lam_grid: Sequence[float], n: int = DEFAULT_SAMPLES,
                         rng=None) -> VerificationReport:
    """``E S^(-lam)`` against ``Gamma(1+lam/alpha)/Gamma(1+lam)`` for lam > -alpha."""
    lam_grid = [float(l) for l in lam_grid]
    if any(l <= -alpha for l in lam_grid):
        raise DomainError("lambda must be > -alpha")
    s = sample_positive_stable(alpha, n, rng)
    rows = []
    for lam in lam_grid:
        ref = float(np.exp(log_gamma(1.0 + lam / alpha) - log_gamma(1.0 + lam)))
        rows.append((lam, empirical_mellin(s, -lam), ref))
    return moment_report("stable_mellin", {"alpha": alpha, "n": n}, rows)


def verify_half_stable(n: int = 50_000, rng=None) -> KsResult:
    """KS test of ``S_{1/2}`` against ``1/(4 G_{1/2})``."""
    g0, g1 = _streams(rng, 2)
    return ks_2samp(sample_positive_stable(0.5, n, g0), 0.25 / sample_gamma(0.5, n, g1))


def verify_gamma_moments(t: float, n: int = DEFAULT_SAMPLES, rng=None) -> VerificationReport:
    """Mean, ``E exp(-G)`` and ``E G^0.7`` of Gamma(t) samples."""
    g = sample_gamma(t, n, rng)
    rows = [
        (1.0, empirical_mellin(g, 1.0), t),
        (0.7, empirical_mellin(g, 0.7), float(np.exp(log_gamma(t + 0.7) - log_gamma(t)))),
    ]
    rep = moment_report("gamma_moments", {"t": t, "n": n}, rows)
    lap = empirical_laplace(g, 1.0)
    ref = 2.0 ** -t
    rep.per_lambda.append(LambdaCheck(1.0, lap.estimate, lap.std_error, ref, lap.z(ref)))
    rep.passed = all(abs(c.z) < Z_THRESHOLD for c in rep.per_lambda)
    return rep


def verify_factorization(a, t: float, lam_grid: Sequence[float], n: int = DEFAULT_SAMPLES,
                         rng=None, *, corrupt_d: bool = False) -> VerificationReport:
    """Mellin check of ``G_t = d^-1 G_{1,t}^a_1 ... G_{n,t}^a_n e^(-X)``.

    Compares the empirical mean of ``G_t^lam`` with
    ``d^-lam * prod_k E[G_t^(a_k lam)] * mellin_ratio(a, t, lam)``, where the
    Gamma factors are independent samples.  The z-score combines the
    standard errors of both sides by the delta method.  ``corrupt_d``
    replaces the scale factor by one.
    """
    if not isinstance(a, AlphaWeights):
        a = AlphaWeights(tuple(a))
    if not t > 0:
        raise DomainError("t must be > 0")
    lam_grid = [float(l) for l in lam_grid]
    if any(l < 0 for l in lam_grid):
        raise DomainError("lambda must be >= 0")
    gens = _streams(rng, len(a) + 1)
    lhs_sample = sample_gamma(t, n, gens[0])
    factors = [sample_gamma(t, n, g) for g in gens[1:]]
    scale = 1.0 if corrupt_d else a.d_alpha
    checks = []
    for lam in lam_grid:
        lhs = empirical_mellin(lhs_sample, lam)
        rhs = scale ** -lam * float(mellin_ratio(a, t, lam))
        rel2 = 0.0
        for ak, f in zip(a.weights, factors):
            m = empirical_mellin(f, ak * lam)
            rhs *= m.estimate
            rel2 += (m.std_error / m.estimate) ** 2
        se = math.hypot(lhs.std_error, abs(rhs) * math.sqrt(rel2))
        z = 0.0 if se == 0 else (lhs.estimate - rhs) / se
        checks.append(LambdaCheck(lam, lhs.estimate, se, rhs, z))
    ok = all(abs(c.z) < Z_THRESHOLD for c in checks)
    params = {"alpha": list(a.weights), "t": t, "n": n, "corrupt_d": corrupt_d}
    return VerificationReport("factorization", params, checks, None, ok)
