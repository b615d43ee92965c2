"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails (the report is
still written), 2 on usage or numerical errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classify, kernels, montecarlo
from .errors import BracketError, ConvergenceError, DomainError, InconclusiveError, OrderError, RegimeError
from .numerics import GridSpec
from .schemas import SCHEMAS
from .theta import DEFAULT_TOL, MEMBER, PointMass, cm_check, hadamard_transform, fd_theta

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
SUBCOMMANDS = ("constants", "cm-check", "classify", "verify", "eval", "hadamard", "sample", "schema")


@dataclass
class RunConfig:
    subcommand: str
    tol: float = DEFAULT_TOL
    grid: GridSpec = field(default_factory=lambda: GridSpec(1e-4, 1e4, 2048, "log"))
    seed: int = montecarlo.DEFAULT_SEED
    samples: int = montecarlo.DEFAULT_SAMPLES
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise DomainError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("json", "csv"):
            raise DomainError("format must be json or csv")
        if self.samples < 2:
            raise DomainError("--samples must be >= 2")
        if not self.tol > 0:
            raise DomainError("--tol must be > 0")

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        grid = GridSpec(ns.grid_min, ns.grid_max, ns.grid_points, ns.grid_spacing)
        return cls(ns.command, ns.tol, grid, ns.seed, ns.samples, ns.output, ns.format)


# ---------------------------------------------------------------------------
# formatting

def _num(v):
    if v is None:
        return None
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(f"{v:.15g}")


def clean(obj):
    """Round floats to 15 significant digits; non-finite values become null."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.15g}"
    return "" if v is None else str(v)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _emit(cfg: RunConfig, payload: dict, columns, rows) -> None:
    text = json.dumps(clean(payload), indent=2) + "\n" if cfg.format == "json" else _csv_text(columns, rows)
    if cfg.output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(cfg.output).write_text(text, newline="")


# ---------------------------------------------------------------------------
# named functions for eval / cm-check

def _alpha(params):
    a = params.get("alpha")
    if a is None:
        raise DomainError("this function needs --alpha")
    return a


def _t(params):
    if params.get("t") is None:
        raise DomainError("this function needs --t")
    return float(params["t"])


def _scalar_alpha(params) -> float:
    a = _alpha(params)
    if len(a) != 1:
        raise DomainError("this function takes a single --alpha")
    return a[0]


def _poly_exp(lam):
    lam = np.asarray(lam, dtype=float)
    return (1.0 + lam) * np.exp(-lam)


FUNCTIONS = {
    "e_kernel": lambda p: kernels.e_kernel(_t(p)),
    "g_kernel": lambda p: kernels.g_kernel(_scalar_alpha(p), _t(p)),
    "h_kernel": lambda p: kernels.h_kernel(_scalar_alpha(p), _t(p)),
    "h_multi": lambda p: kernels.h_multi(kernels.AlphaWeights(tuple(_alpha(p))), _t(p)),
    "m_measure": lambda p: kernels.m_measure(kernels.AlphaWeights(tuple(_alpha(p))), _t(p)),
    "mellin_ratio": lambda p: (lambda lam: kernels.mellin_ratio(tuple(_alpha(p)), _t(p), lam)),
    "G_alpha_t": lambda p: (lambda lam: kernels.G_alpha_t(_scalar_alpha(p), _t(p), lam)),
    "G_alpha": lambda p: (lambda lam: kernels.G_alpha(_scalar_alpha(p), lam)),
    "P_poly": lambda p: (lambda x: kernels.P_poly(x, _t(p))),
    "Q_poly": lambda p: (lambda x: kernels.Q_poly(x, _t(p))),
    "delta_P": lambda p: kernels.delta_P,
    "delta_Q": lambda p: kernels.delta_Q,
    "t_plus_P": lambda p: kernels.t_plus_P,
    "t_plus_Q": lambda p: kernels.t_plus_Q,
    "poly_exp": lambda p: _poly_exp,
}

HADAMARD_DENSITIES = {
    "exp": lambda p: (lambda y: np.exp(-float(p.get("rate", 1.0)) * np.asarray(y, dtype=float))),
    "gamma": lambda p: (lambda y: np.asarray(y, dtype=float) ** (float(p.get("shape", 1.0)) - 1.0)
                        * np.exp(-np.asarray(y, dtype=float))),
    "point": lambda p: PointMass(float(p.get("location", 1.0)), float(p.get("weight", 1.0))),
}


def _params(ns) -> dict:
    out = {}
    if getattr(ns, "alpha", None) is not None:
        out["alpha"] = ns.alpha
    if getattr(ns, "t", None) is not None:
        out["t"] = ns.t
    for item in getattr(ns, "param", None) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise DomainError(f"--param expects key=value, got {item!r}")
        out[key] = float(val)
    return out


def _build(name: str, params: dict):
    if name not in FUNCTIONS:
        raise DomainError(f"unknown function {name!r}; choose from {sorted(FUNCTIONS)}")
    return FUNCTIONS[name](params)


def _vec(f, x):
    return np.asarray(f(x), dtype=float) * np.ones_like(x)


# ---------------------------------------------------------------------------
# subcommands

def cmd_constants(cfg: RunConfig, ns) -> int:
    rep = kernels.constants_report()
    x0 = rep["x0"].value
    payload = {
        "t0": rep["t0"].value,
        "x0": x0,
        "t1": rep["t1"].value,
        "x0_residual": abs(math.sinh(x0 / 2) - x0),
        "reports": {k: v.to_json() for k, v in rep.items()},
    }
    rows = []
    for k, v in rep.items():
        diffs = list(v.abs_diffs) + [None] * (2 - len(v.abs_diffs))
        rows.append([k, v.value, v.achieving_x, v.closed_form] + diffs)
    _emit(cfg, payload, ["name", "value", "achieving_x", "closed_form", "abs_diff_1", "abs_diff_2"], rows)
    return EXIT_OK


def cmd_cm_check(cfg: RunConfig, ns) -> int:
    params = _params(ns)
    f = _build(ns.function, params)
    cert = cm_check(f, ns.order, cfg.grid, cfg.tol)
    payload = {"function": ns.function, "params": params, **cert.to_json()}
    _emit(cfg, payload, ["function", "order", "verdict", "failed_order", "witness", "margin"],
          [[ns.function, cert.n, cert.verdict, cert.failed_order, cert.witness, cert.margin]])
    return EXIT_OK if cert.verdict == MEMBER else EXIT_FAIL


def cmd_classify(cfg: RunConfig, ns) -> int:
    tr = classify.load_triplet(ns.triplet)
    verdict = classify.classify_sd(tr, ns.nmax, cfg.grid, cfg.tol)
    payload = {"label": tr.label, **verdict.to_json()}
    rows = []
    for m, c in enumerate(verdict.per_order):
        integ = verdict.integrability_ok[m] if m < len(verdict.integrability_ok) else None
        rows.append([m, c.verdict, c.failed_order, c.witness, c.margin, integ])
    _emit(cfg, payload, ["n", "verdict", "failed_order", "witness", "margin", "integrable"], rows)
    if ns.require_n is not None and verdict.max_verified_n < ns.require_n:
        return EXIT_FAIL
    return EXIT_OK


def _need(value, flag):
    if value is None:
        raise DomainError(f"this identity needs {flag}")
    return value


def cmd_verify(cfg: RunConfig, ns) -> int:
    rng = montecarlo.RngStream(cfg.seed, ns.stream)
    n = cfg.samples
    ident = ns.identity
    if ident == "gordon":
        p, t = int(_need(ns.p, "--p")), float(_need(ns.t, "--t"))
        ks = montecarlo.verify_gordon(p, t, n, rng, t_scale=ns.t_scale)
        rep = montecarlo.VerificationReport("gordon", {"p": p, "t": t, "t_scale": ns.t_scale, "n": n},
                                            [], ks, ks.passed)
    elif ident == "half-stable":
        ks = montecarlo.verify_half_stable(n, rng)
        rep = montecarlo.VerificationReport("half_stable", {"n": n}, [], ks, ks.passed)
    elif ident == "kanter":
        alpha = _need(ns.alpha, "--alpha")[0]
        rows = montecarlo.verify_kanter_mellin(alpha, ns.lambdas or [1.0], n, rng)
        rep = montecarlo.moment_report("kanter_mellin", {"alpha": alpha, "n": n}, rows)
    elif ident == "stable-mellin":
        alpha = _need(ns.alpha, "--alpha")[0]
        rep = montecarlo.verify_stable_mellin(alpha, ns.lambdas or [1.0], n, rng)
    elif ident == "gamma-moments":
        rep = montecarlo.verify_gamma_moments(float(_need(ns.t, "--t")), n, rng)
    elif ident == "factorization":
        a = kernels.AlphaWeights(tuple(_need(ns.alpha, "--alpha")))
        rep = montecarlo.verify_factorization(a, float(_need(ns.t, "--t")), ns.lambdas or [0.5, 1.0, 2.0],
                                              n, rng, corrupt_d=ns.corrupt_d)
    else:  # pragma: no cover - argparse restricts choices
        raise DomainError(f"unknown identity {ident!r}")
    payload = rep.to_json()
    payload["params"]["seed"] = cfg.seed
    if rep.ks is not None:
        rows = [[rep.identity, rep.ks.statistic, rep.ks.p_value, rep.passed]]
        cols = ["identity", "statistic", "p_value", "pass"]
    else:
        rows = [[c.lam, c.empirical, c.se, c.analytic, c.z] for c in rep.per_lambda]
        cols = ["lambda", "empirical", "se", "analytic", "z"]
    _emit(cfg, payload, cols, rows)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_eval(cfg: RunConfig, ns) -> int:
    params = _params(ns)
    f = _build(ns.function, params)
    x = cfg.grid.values()
    y = _vec(f, x)
    finite = y[np.isfinite(y)]
    summary = {"min": float(finite.min()) if finite.size else None,
               "max": float(finite.max()) if finite.size else None}
    payload = {"function": ns.function, "params": params, "grid": cfg.grid.to_dict(),
               "columns": ["x", ns.function], "rows": np.column_stack([x, y]).tolist(), "summary": summary}
    _emit(cfg, payload, ["x", ns.function], zip(x, y))
    return EXIT_OK


def cmd_hadamard(cfg: RunConfig, ns) -> int:
    params = _params(ns)
    if ns.density not in HADAMARD_DENSITIES:
        raise DomainError(f"unknown density {ns.density!r}")
    m = HADAMARD_DENSITIES[ns.density](params)
    H = hadamard_transform(m, ns.n)
    x = cfg.grid.values()
    hv = H(x)
    cols, data = ["x", "H"], [x, hv]
    summary = {}
    code = EXIT_OK
    if ns.check:
        if isinstance(m, PointMass):
            raise DomainError("--check needs a density, not a point mass")
        recovered = (-1) ** ns.n * fd_theta(H, ns.n, x)
        mv = np.asarray(m(x), dtype=float)
        dev = float(np.max(np.abs(recovered - mv)))
        summary = {"max_deviation": dev, "check_tol": ns.check_tol, "pass": dev <= ns.check_tol}
        cols += ["m", "recovered"]
        data += [mv, recovered]
        code = EXIT_OK if dev <= ns.check_tol else EXIT_FAIL
    payload = {"function": f"hadamard[{ns.density}]", "params": {**params, "n": ns.n},
               "grid": cfg.grid.to_dict(), "columns": cols, "rows": np.column_stack(data).tolist(),
               "summary": summary}
    _emit(cfg, payload, cols, zip(*data))
    return code


def cmd_sample(cfg: RunConfig, ns) -> int:
    rng = montecarlo.RngStream(cfg.seed, ns.stream)
    if ns.law == "gamma":
        s = montecarlo.sample_gamma(float(_need(ns.t, "--t")), cfg.samples, rng)
    else:
        s = montecarlo.sample_positive_stable(_need(ns.alpha, "--alpha")[0], cfg.samples, rng)
    if cfg.format == "csv":
        _emit(cfg, {}, ["index", "value"], enumerate(s))
    else:
        st = montecarlo.summarize(s)
        payload = {"function": f"sample[{ns.law}]", "params": {**_params(ns), "seed": cfg.seed, "stream": ns.stream},
                   "grid": {"lo": 0, "hi": cfg.samples - 1, "points": cfg.samples, "spacing": "linear"},
                   "columns": ["index", "value"], "rows": [[i, v] for i, v in enumerate(s)],
                   "summary": {"mean": st.estimate, "std_error": st.std_error, "n": st.n}}
        _emit(cfg, payload, [], [])
    return EXIT_OK


def cmd_schema(cfg: RunConfig, ns) -> int:
    sys.stdout.write(json.dumps(SCHEMAS[ns.name], indent=2) + "\n")
    return EXIT_OK


HANDLERS = {
    "constants": cmd_constants,
    "cm-check": cmd_cm_check,
    "classify": cmd_classify,
    "verify": cmd_verify,
    "eval": cmd_eval,
    "hadamard": cmd_hadamard,
    "sample": cmd_sample,
    "schema": cmd_schema,
}


# ---------------------------------------------------------------------------
# parser

def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run options")
    g.add_argument("--tol", type=float, default=DEFAULT_TOL)
    g.add_argument("--grid-min", type=float, default=1e-4)
    g.add_argument("--grid-max", type=float, default=1e4)
    g.add_argument("--grid-points", type=int, default=2048)
    g.add_argument("--grid-spacing", choices=("log", "linear"), default="log")
    g.add_argument("--seed", type=int, default=montecarlo.DEFAULT_SEED)
    g.add_argument("--samples", type=lambda s: int(float(s)), default=montecarlo.DEFAULT_SAMPLES)
    g.add_argument("--format", choices=("json", "csv"), default="json")
    g.add_argument("--output", default=None, help="file path; stdout when omitted")

    fparams = argparse.ArgumentParser(add_help=False)
    fparams.add_argument("--alpha", type=_floats, help="weight or comma-separated weights")
    fparams.add_argument("--t", type=float)
    fparams.add_argument("--param", action="append", metavar="KEY=VALUE")

    parser = argparse.ArgumentParser(prog="multisd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("constants", parents=[common], help="critical constants t0, x0, t1")

    p = sub.add_parser("cm-check", parents=[common, fparams], help="finite-order complete monotonicity")
    p.add_argument("function", choices=sorted(FUNCTIONS))
    p.add_argument("--order", type=int, default=8)

    p = sub.add_parser("classify", parents=[common], help="SD_n classification of a triplet spec")
    p.add_argument("--triplet", required=True)
    p.add_argument("--nmax", type=int, default=classify.DEFAULT_NMAX)
    p.add_argument("--require-n", type=int, default=None, help="exit 1 unless max_verified_n >= this")

    p = sub.add_parser("verify", parents=[common, fparams], help="Monte Carlo identity checks")
    p.add_argument("identity", choices=("gordon", "kanter", "stable-mellin", "half-stable",
                                        "gamma-moments", "factorization"))
    p.add_argument("--p", type=int)
    p.add_argument("--lambdas", type=_floats)
    p.add_argument("--t-scale", type=float, default=1.0)
    p.add_argument("--corrupt-d", action="store_true")
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("eval", parents=[common, fparams], help="tabulate a named function on the grid")
    p.add_argument("function", choices=sorted(FUNCTIONS))

    p = sub.add_parser("hadamard", parents=[common, fparams], help="Hadamard transform of a density")
    p.add_argument("--density", choices=sorted(HADAMARD_DENSITIES), default="exp")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--check", action="store_true", help="also invert and compare with the density")
    p.add_argument("--check-tol", type=float, default=1e-5)

    p = sub.add_parser("sample", parents=[common, fparams], help="draw samples")
    p.add_argument("law", choices=("gamma", "stable"))
    p.add_argument("--stream", type=int, default=0)

    p = sub.add_parser("schema", parents=[common], help="print a report JSON schema")
    p.add_argument("name", choices=sorted(SCHEMAS))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        cfg = RunConfig.from_args(ns)
        return HANDLERS[cfg.subcommand](cfg, ns)
    except (DomainError, ConvergenceError, BracketError, OrderError, RegimeError, InconclusiveError,
            ValueError, OSError, KeyError) as exc:
        print(f"multisd {ns.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
