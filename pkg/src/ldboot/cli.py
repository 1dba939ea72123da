"""Command-line entry point.

Subcommands: sample, rate, verify-ldp, couple, legendre, w1.  Every
command reads a JSON config (--config PATH, "-" for stdin), validates it
strictly (unknown fields are rejected), and writes CSV or JSON to --out
or stdout.  One --seed flag drives all randomness through the documented
stream derivation in :mod:`ldboot.samplers`.

Exit codes: 0 success, 1 schema error, 2 numeric failure, 3
degenerate-estimator warning.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np
from scipy import stats

from .errors import (ConfigError, ContractError, DegenerateEstimatorError,
                     DimensionError, InsufficientDataError, NumericError)
from .measures import AtomicWeightMeasure, FiniteMeasure, w1_line
from .montecarlo import (LdpExperiment, composition_counts, run_conditional_ldp,
                         run_unconditional_ldp, tv_ball_infimum)
from .rates import (RateFunctionSpec, rate_conditional_general, rate_efron,
                    rate_iid_weighted, rate_jackknife, rate_k_blocks,
                    rate_kullback_bound)
from .samplers import (WEIGHTS_STREAM, SchemeConfig, couple_poisson_multinomial,
                       stream)
from .transforms import (CgfSpec, TabulatedCgf, legendre_binomial,
                         legendre_numeric, legendre_scaled_poisson)

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_NUMERIC = 2
EXIT_DEGENERATE = 3


def _ext(value: float):
    """Extended-real JSON encoding: finite floats pass, infinity is the string 'inf'."""
    if value is None or math.isnan(value):
        return None
    return "inf" if math.isinf(value) else float(value)


def _read_config(path: str) -> dict:
    text = sys.stdin.read() if path == "-" else open(path, "r", encoding="utf-8").read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc

def _check_fields(doc: dict, required: set, optional: set = frozenset()) -> None:
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"missing config fields: {sorted(missing)}")
    extra = set(doc) - required - optional
    if extra:
        raise ConfigError(f"unknown config fields: {sorted(extra)}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _prob_vector(doc, name: str) -> FiniteMeasure:
    try:
        m = FiniteMeasure(doc)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{name} is not a valid mass vector: {exc}") from exc
    if not m.probability():
        raise ConfigError(f"{name} must sum to 1")
    return m


# -----------------------------------------------------------------------------
# sample
# -----------------------------------------------------------------------------
def cmd_sample(doc: dict, seed: int, out: str | None, fmt: str, workers: int) -> int:
    _check_fields(doc, {"scheme", "n", "replications"})
    scheme = SchemeConfig.from_doc(doc["scheme"])
    n = int(doc["n"])
    reps = int(doc["replications"])
    if n < 1 or reps < 1:
        raise ConfigError("n and replications must be positive")
    rng = stream(seed, WEIGHTS_STREAM)
    rows = [scheme.sample(n, rng) for _ in range(reps)]
    lines = [",".join(f"w{i + 1}" for i in range(n))]
    lines.extend(",".join(repr(float(x)) for x in row) for row in rows)
    _emit("\n".join(lines) + "\n", out)
    worst = max(abs(float(r.sum()) - n) for r in rows)
    print(f"H1 check: {reps} draws, max |sum - n| = {worst:.3e}", file=sys.stderr)
    return EXIT_OK


# -----------------------------------------------------------------------------
# rate
# -----------------------------------------------------------------------------
def _rate_dispatch(scheme: SchemeConfig, nu: FiniteMeasure, mu: FiniteMeasure):
    """(value, argmin dict or None, reason or None, oracle check names)."""
    v = scheme.variant
    if v == "m_out_of_n":
        value = rate_efron(nu, mu, scheme.lam)
        checks = []
        bound = rate_kullback_bound(nu, mu,
                                    lambda x: legendre_scaled_poisson(scheme.lam, x))
        if (math.isinf(value) and math.isinf(bound)) or abs(value - bound) <= 1e-8:
            checks.append("kullback_identity")
        reason = "not_absolutely_continuous" if math.isinf(value) else None
        return value, None, reason, checks
    if v == "delete_h":
        value = rate_jackknife(nu, mu, scheme.alpha)
        checks = []
        if scheme.alpha > 0.0:
            xi = TabulatedCgf([0.0, 1.0 / (1.0 - scheme.alpha)],
                              [scheme.alpha, 1.0 - scheme.alpha])
            res = rate_conditional_general(nu, mu, xi)
            same = (math.isinf(value) and math.isinf(res.value)) or \
                abs(value - res.value) <= 1e-8
            if same:
                checks.append("pinned_kernel_crosscheck")
        reason = "chi_not_probability" if math.isinf(value) else None
        return value, None, reason, checks
    if v == "hypergeometric":
        value = rate_kullback_bound(nu, mu, lambda x: legendre_binomial(scheme.K, x))
        reason = "ratio_exceeds_K" if math.isinf(value) else None
        return value, None, reason, ["lower_bound_only"]
    if v == "iid_weighted":
        cgf = TabulatedCgf(scheme.grid, scheme.probs)
        value, m_star = rate_iid_weighted(nu, mu,
                                          lambda x: legendre_numeric(cgf, x).value)
        reason = "not_mutually_absolutely_continuous" if math.isinf(value) else None
        arg = None if m_star is None else {"m": m_star}
        return value, arg, reason, ["grid_bracket_golden"]
    if v == "k_blocks":
        mu_k = mu.mass.copy()
        for _ in range(scheme.k - 1):
            mu_k = np.kron(mu_k, mu.mass)
        value, joint, diag = rate_k_blocks(nu, FiniteMeasure(mu_k), scheme.k)
        checks = []
        h = rate_efron(nu, mu, 1.0)
        if (math.isinf(value) and math.isinf(h)) or abs(value - h) <= 1e-6:
            checks.append("iid_identity")
        reason = diag.get("reason") if math.isinf(value) else None
        return value, None, reason, checks
    raise ConfigError(f"rate evaluation not available for scheme {v!r}")


def cmd_rate(doc: dict, seed: int, out: str | None, fmt: str, workers: int) -> int:
    _check_fields(doc, {"scheme", "nu", "mu"})
    scheme = SchemeConfig.from_doc(doc["scheme"])
    nu = _prob_vector(doc["nu"], "nu")
    mu = _prob_vector(doc["mu"], "mu")
    if nu.alphabet_size != mu.alphabet_size:
        raise ConfigError("nu and mu must share an alphabet")
    value, argmin, reason, checks = _rate_dispatch(scheme, nu, mu)
    result = {"scheme": scheme.to_doc(), "value": _ext(value),
              "oracle_checks_run": checks}
    if argmin is not None:
        result["argmin"] = argmin
    if reason is not None:
        result["reason"] = reason
    _emit(json.dumps(result, indent=2) + "\n", out)
    return EXIT_OK


# -----------------------------------------------------------------------------
# verify-ldp
# -----------------------------------------------------------------------------
def _analytic_ball_infimum(exp: LdpExperiment):
    """Ball infimum of the scheme's rate at the experiment's speed (binary only)."""
    nu = exp.target_measure()
    mu = exp.observations_measure()
    if nu.alphabet_size != 2:
        return None
    scheme = exp.scheme
    if exp.observations_mode == "iid":
        ix = RateFunctionSpec.entropy_to(mu)
        if scheme.variant == "m_out_of_n":
            from .rates import rate_unconditional

            def k_of(x):
                val, _ = rate_unconditional(x, ix,
                                            lambda a, z: rate_efron(a, z, scheme.lam),
                                            tol=1e-6)
                return val
            return tv_ball_infimum(k_of, nu, exp.epsilon, tol=1e-6)[0]
        if scheme.variant == "delete_h":
            from .rates import rate_jackknife_unconditional

            def k_of(x):
                val, _ = rate_jackknife_unconditional(x, ix, scheme.alpha, tol=1e-6)
                return val
            return tv_ball_infimum(k_of, nu, exp.epsilon, tol=1e-6)[0]
        return None
    lam_eff = 1.0 if exp.speed == "m_of_n" else None
    if scheme.variant == "m_out_of_n":
        lam = lam_eff if lam_eff is not None else scheme.lam
        return tv_ball_infimum(lambda x: rate_efron(x, mu, lam), nu, exp.epsilon)[0]
    if scheme.variant == "delete_h":
        return tv_ball_infimum(lambda x: rate_jackknife(x, mu, scheme.alpha),
                               nu, exp.epsilon)[0]
    if scheme.variant == "k_blocks":
        return tv_ball_infimum(lambda x: rate_efron(x, mu, 1.0), nu, exp.epsilon)[0]
    return None


def cmd_verify_ldp(doc: dict, seed: int, out: str | None, fmt: str, workers: int) -> int:
    threshold = doc.pop("max_relative_gap", 0.2)
    if "seed" not in doc:
        doc["seed"] = seed
    exp = LdpExperiment.from_doc(doc)
    if exp.observations_mode == "composition":
        estimate = run_conditional_ldp(exp, workers=workers)
    else:
        estimate = run_unconditional_ldp(exp, workers=workers)

    lines = ["n,p_hat,stderr,log_p"]
    for e in estimate.per_n:
        logp = "" if e.log_p is None else repr(e.log_p)
        lines.append(f"{e.n},{repr(e.p_hat)},{repr(e.stderr)},{logp}")
    csv_text = "\n".join(lines) + "\n"

    oracle = _analytic_ball_infimum(exp)
    gap = None
    passed = None
    if oracle is not None and math.isfinite(estimate.fitted_slope) and oracle > 0:
        gap = abs(estimate.fitted_slope - oracle) / oracle
        passed = bool(gap <= threshold)
    summary = {
        "slope": _ext(estimate.fitted_slope),
        "stderr": _ext(estimate.slope_stderr),
        "speed": estimate.speed,
        "analytic_ball_infimum": _ext(oracle) if oracle is not None else None,
        "relative_gap": gap,
        "max_relative_gap": threshold,
        "pass": passed,
        "per_n": estimate.to_doc()["per_n"],
    }
    summary_text = json.dumps(summary, indent=2) + "\n"
    if out:
        _emit(csv_text, out)
        _emit(summary_text, out + ".summary.json")
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(summary_text)
    if any(e.missing for e in estimate.per_n):
        print("warning: zero-hit entries present; consider the tilted estimator",
              file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


# -----------------------------------------------------------------------------
# couple
# -----------------------------------------------------------------------------
def cmd_couple(doc: dict, seed: int, out: str | None, fmt: str, workers: int) -> int:
    _check_fields(doc, {"n", "m", "replications"}, {"competitors"})
    n = int(doc["n"])
    m = int(doc["m"])
    reps = int(doc["replications"])
    n_comp = int(doc.get("competitors", 100))
    if min(n, m, reps) < 1:
        raise ConfigError("n, m, replications must be positive")
    rng = stream(seed, WEIGHTS_STREAM)

    comp_rng = stream(seed, WEIGHTS_STREAM, 1)
    competitors = comp_rng.random((n_comp, n))
    competitors *= n / competitors.sum(axis=1, keepdims=True)
    competitors_sorted = np.sort(competitors, axis=1)

    m1 = np.empty(reps, dtype=int)
    exact_branch = 0
    violations = 0
    w1_sum = 0.0
    scale = n / m
    for i in range(reps):
        outcome = couple_poisson_multinomial(n, m, rng)
        m1[i] = outcome.m_vec[0]
        if outcome.moved_mass == 0:
            exact_branch += 1
        ms = np.sort(outcome.m_vec * scale)
        zs = np.sort(outcome.z * scale)
        lhs = np.abs(ms - zs).mean()
        w1_sum += lhs
        rhs = np.abs(competitors_sorted - zs).mean(axis=1)
        violations += int((lhs > rhs + 1e-12).sum())

    # chi-square of the first-coordinate marginal against Binomial(m, 1/n)
    support = np.arange(m + 1)
    pmf = stats.binom.pmf(support, m, 1.0 / n)
    observed = np.bincount(m1, minlength=m + 1).astype(float)
    expected = pmf * reps
    # pool the tail so every expected cell count is at least 5
    keep = expected >= 5.0
    obs_pooled = np.append(observed[keep], observed[~keep].sum())
    exp_pooled = np.append(expected[keep], expected[~keep].sum())
    usable = exp_pooled > 0.0
    if usable.sum() < 2:
        chi2, pval = 0.0, 1.0  # degenerate marginal (n = 1)
    else:
        chi2, pval = stats.chisquare(obs_pooled[usable],
                                     exp_pooled[usable] * obs_pooled[usable].sum()
                                     / exp_pooled[usable].sum())

    p_exact = math.exp(-m + m * math.log(m) - math.lgamma(m + 1))
    freq = exact_branch / reps
    freq_se = math.sqrt(max(p_exact * (1 - p_exact), 1e-300) / reps)
    result = {
        "n": n, "m": m, "replications": reps,
        "chi_square": float(chi2),
        "chi_square_p": float(pval),
        "optimality_violations": int(violations),
        "mean_w1_m_vs_z": w1_sum / reps,
        "exact_branch_frequency": freq,
        "exact_branch_expected": p_exact,
        "exact_branch_z": (freq - p_exact) / freq_se,
    }
    _emit(json.dumps(result, indent=2) + "\n", out)
    return EXIT_OK


# -----------------------------------------------------------------------------
# legendre
# -----------------------------------------------------------------------------
def cmd_legendre(doc: dict, seed: int, out: str | None, fmt: str, workers: int) -> int:
    _check_fields(doc, {"cgf", "x_grid"})
    cgf = CgfSpec.from_doc(doc["cgf"])
    xs = [float(x) for x in doc["x_grid"]]
    rows = []
    max_disc = 0.0
    for x in xs:
        numeric = legendre_numeric(cgf, x).value
        if cgf.kind == "scaled_poisson":
            closed = legendre_scaled_poisson(cgf.lam, x)
        elif cgf.kind == "binomial":
            closed = legendre_binomial(cgf.K, x)
        else:
            closed = None
        if closed is not None:
            if math.isinf(closed) and math.isinf(numeric):
                disc = 0.0
            elif math.isinf(closed) or math.isinf(numeric):
                disc = math.inf
            else:
                disc = abs(closed - numeric)
            max_disc = max(max_disc, disc)
        rows.append((x, closed, numeric))

    if fmt == "json":
        payload = {
            "rows": [{"x": x, "closed_form": _ext(c) if c is not None else None,
                      "numeric": _ext(v)} for x, c, v in rows],
            "max_abs_discrepancy": _ext(max_disc),
        }
        _emit(json.dumps(payload, indent=2) + "\n", out)
    else:
        def cell(v):
            if v is None:
                return ""
            return "inf" if math.isinf(v) else repr(v)
        lines = ["x,closed_form,numeric"]
        lines.extend(f"{repr(x)},{cell(c)},{cell(v)}" for x, c, v in rows)
        _emit("\n".join(lines) + "\n", out)
        print(f"max |closed - numeric| = {max_disc:.3e}", file=sys.stderr)
    return EXIT_OK


# -----------------------------------------------------------------------------
# w1
# -----------------------------------------------------------------------------
def cmd_w1(doc: dict, seed: int, out: str | None, fmt: str, workers: int) -> int:
    _check_fields(doc, {"a", "b"})
    a = AtomicWeightMeasure(doc["a"])
    b = AtomicWeightMeasure(doc["b"])
    value = w1_line(a, b)
    _emit(json.dumps({"w1": value}) + "\n", out)
    return EXIT_OK


# -----------------------------------------------------------------------------
# entry point
# -----------------------------------------------------------------------------
_COMMANDS = {
    "sample": cmd_sample,
    "rate": cmd_rate,
    "verify-ldp": cmd_verify_ldp,
    "couple": cmd_couple,
    "legendre": cmd_legendre,
    "w1": cmd_w1,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldboot",
        description="Bootstrap weight schemes, rate functions, and LDP verification")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True,
                       help="JSON config path, or - for stdin")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _read_config(args.config)
        return _COMMANDS[args.command](doc, args.seed, args.out, args.format,
                                       args.workers)
    except (NumericError, InsufficientDataError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DegenerateEstimatorError as exc:
        print(f"degenerate estimator: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ConfigError, DimensionError, ContractError, ValueError) as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
