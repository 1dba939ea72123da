"""Monte Carlo verification of the large-deviation decay rates.

Estimates P(bootstrapped empirical measure lands in a TV ball around a
target) across a ladder of n, fits the exponential decay slope, and
compares it with the analytic ball infimum of the rate function.  The
multinomial scheme gets an exact exponentially tilted estimator (its
cell law tilts in closed form); other schemes use direct counting at
moderate rarity.

Replications are split into fixed-size chunks, each driven by its own
PCG64 stream derived from the experiment seed and the chunk position, so
results are bit-identical no matter how many workers execute the chunks
and merges are order-independent sums.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, DegenerateEstimatorError, DimensionError,
                     InsufficientDataError)
from .measures import FiniteMeasure
from .samplers import OBSERVATIONS_STREAM, WEIGHTS_STREAM, SchemeConfig, stream

CHUNK_SIZE = 25_000


# -----------------------------------------------------------------------------
# Experiment configuration and results
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class LdpExperiment:
    """One decay-rate verification run.

    ``observations`` is ("composition", mass) for fixed compositions
    scaled from a rational law (conditional experiments) or
    ("iid", mass) for iid draws (unconditional).  ``speed`` selects the
    normalization of log probabilities: "n" or "m_of_n" (the rescaled
    bound for the m-out-of-n scheme).
    """

    scheme: SchemeConfig
    observations_mode: str
    observations_mass: tuple
    target: tuple
    epsilon: float
    n_values: tuple
    replications: int
    estimator: str = "direct"
    seed: int = 0
    speed: str = "n"
    tilt_target: tuple | None = None

    def __post_init__(self):
        if self.observations_mode not in ("composition", "iid"):
            raise ConfigError("observations mode must be composition or iid")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError("epsilon must lie in (0, 1)")
        s = len(self.observations_mass)
        if len(self.target) != s:
            raise ConfigError("target and observation alphabet sizes differ")
        ns = tuple(self.n_values)
        if len(ns) == 0 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n_values must be strictly increasing")
        if any(n < s for n in ns):
            raise ConfigError("every n must be at least the alphabet size")
        if self.replications < 1000:
            raise ConfigError("need at least 1000 replications")
        if self.estimator not in ("direct", "tilted"):
            raise ConfigError("estimator must be direct or tilted")
        if self.estimator == "tilted" and self.scheme.variant != "m_out_of_n":
            raise ConfigError("the tilted estimator only covers the m_out_of_n scheme")
        if self.speed not in ("n", "m_of_n"):
            raise ConfigError("speed must be n or m_of_n")
        if self.speed == "m_of_n" and self.scheme.variant != "m_out_of_n":
            raise ConfigError("rescaled speed only applies to the m_out_of_n scheme")

    def target_measure(self) -> FiniteMeasure:
        return FiniteMeasure(self.target)

    def observations_measure(self) -> FiniteMeasure:
        return FiniteMeasure(self.observations_mass)

    def to_doc(self) -> dict:
        doc = {
            "scheme": self.scheme.to_doc(),
            "observations": {"mode": self.observations_mode,
                             "mass": list(self.observations_mass)},
            "target": list(self.target),
            "epsilon": self.epsilon,
            "n_values": list(self.n_values),
            "replications": self.replications,
            "estimator": self.estimator,
            "seed": self.seed,
            "speed": self.speed,
        }
        if self.tilt_target is not None:
            doc["tilt_target"] = list(self.tilt_target)
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "LdpExperiment":
        known = {"scheme", "observations", "target", "epsilon", "n_values",
                 "replications", "estimator", "seed", "speed", "tilt_target"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown experiment fields: {sorted(extra)}")
        for key in ("scheme", "observations", "target", "epsilon", "n_values",
                    "replications"):
            if key not in doc:
                raise ConfigError(f"experiment needs field {key!r}")
        obs = doc["observations"]
        if not isinstance(obs, dict) or set(obs) != {"mode", "mass"}:
            raise ConfigError("observations must be {mode, mass}")
        tilt = doc.get("tilt_target")
        return LdpExperiment(
            scheme=SchemeConfig.from_doc(doc["scheme"]),
            observations_mode=obs["mode"],
            observations_mass=tuple(map(float, obs["mass"])),
            target=tuple(map(float, doc["target"])),
            epsilon=float(doc["epsilon"]),
            n_values=tuple(int(n) for n in doc["n_values"]),
            replications=int(doc["replications"]),
            estimator=doc.get("estimator", "direct"),
            seed=int(doc.get("seed", 0)),
            speed=doc.get("speed", "n"),
            tilt_target=tuple(map(float, tilt)) if tilt is not None else None,
        )

    @staticmethod
    def from_json(text: str) -> "LdpExperiment":
        return LdpExperiment.from_doc(json.loads(text))


@dataclass(frozen=True)
class PerNEstimate:
    n: int
    speed_value: int
    hits: int
    p_hat: float
    stderr: float
    log_p: float | None
    missing: bool = False
    note: str = ""


@dataclass
class RateEstimate:
    """Per-n hit probabilities and the fitted decay slope."""

    per_n: list
    fitted_slope: float
    slope_stderr: float
    speed: str = "n"

    def to_doc(self) -> dict:
        return {
            "speed": self.speed,
            "fitted_slope": self.fitted_slope,
            "slope_stderr": self.slope_stderr,
            "per_n": [
                {"n": e.n, "speed_value": e.speed_value, "hits": e.hits,
                 "p_hat": e.p_hat, "stderr": e.stderr,
                 "log_p": e.log_p, "missing": e.missing, "note": e.note}
                for e in self.per_n
            ],
        }


# -----------------------------------------------------------------------------
# Composition handling and batched schemes
# -----------------------------------------------------------------------------
def composition_counts(mass, n: int) -> np.ndarray:
    """Integer symbol counts for a fixed composition scaled from a rational law."""
    m = np.asarray(mass, dtype=float)
    scaled = m * n
    counts = np.rint(scaled)
    if np.any(np.abs(scaled - counts) > 1e-9 * n):
        raise ConfigError(f"composition {m.tolist()} does not scale to integers at n={n}")
    return counts.astype(int)


def _kblock_window_matrix(counts: np.ndarray, n: int, k: int, style: str) -> np.ndarray:
    """A[j, a] = number of windows with label a that contain position j."""
    s = counts.size
    labels = np.repeat(np.arange(s), counts)
    A = np.zeros((n, s))
    half = k // 2 if style == "moving" else 0
    for i in range(n):
        a = labels[i]
        for off in range(k):
            j = (i - half + off) % n
            A[j, a] += 1.0
    return A


def batch_conditional_masses(scheme: SchemeConfig, counts: np.ndarray, n: int,
                             reps: int, rng: np.random.Generator) -> np.ndarray:
    """Masses of the weighted empirical measure for ``reps`` weight draws.

    Fixed composition: symbol a occupies ``counts[a]`` of the n positions
    (contiguously).  Exchangeability of every scheme but k-blocks makes
    the layout irrelevant; for k-blocks the contiguous layout is part of
    the experiment definition.
    """
    s = counts.size
    v = scheme.variant
    if v == "m_out_of_n":
        m = scheme.m_of_n(n)
        g = rng.multinomial(m, counts / n, size=reps)
        return g / m
    if v == "delete_h":
        h = scheme.h_of_n(n)
        if h == 0:
            return np.tile(counts / n, (reps, 1))
        zeros = rng.multivariate_hypergeometric(counts, h, size=reps)
        return (counts - zeros) * (n / (n - h)) / n
    if v == "hypergeometric":
        g = rng.multivariate_hypergeometric(counts * scheme.K, n, size=reps)
        return g / n
    if v == "iid_weighted":
        grid = np.asarray(scheme.grid)
        probs = np.asarray(scheme.probs)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        out = np.empty((reps, s))
        done = 0
        while done < reps:
            rows = min(20_000, reps - done)
            y = grid[rng.choice(grid.size, size=(rows, n), p=probs / probs.sum())]
            sums = np.stack([y[:, bounds[a]:bounds[a + 1]].sum(axis=1)
                             for a in range(s)], axis=1)
            out[done:done + rows] = sums / y.sum(axis=1, keepdims=True)
            done += rows
        return out
    if v == "deterministic":
        t = np.asarray(scheme.template, dtype=float)
        if t.size != n:
            raise ConfigError("template length must equal n")
        bounds = np.concatenate([[0], np.cumsum(counts)])
        out = np.empty((reps, s))
        done = 0
        while done < reps:
            rows = min(20_000, reps - done)
            perm = rng.permuted(np.tile(t, (rows, 1)), axis=1)
            out[done:done + rows] = np.stack(
                [perm[:, bounds[a]:bounds[a + 1]].sum(axis=1) for a in range(s)],
                axis=1) / n
            done += rows
        return out
    # k_blocks
    k = scheme.k
    if n % k != 0:
        raise ConfigError(f"k_blocks needs k | n, got n={n}, k={k}")
    A = _kblock_window_matrix(counts, n, k, scheme.style)
    out = np.empty((reps, s))
    done = 0
    while done < reps:
        rows = min(20_000, reps - done)
        w = k * rng.multinomial(n // k, np.full(n, 1.0 / n), size=rows)
        out[done:done + rows] = (w @ A) / (n * k)
        done += rows
    return out


def _unconditional_masses(scheme: SchemeConfig, mu_mass: np.ndarray, n: int,
                          reps: int, rng_w: np.random.Generator,
                          rng_x: np.random.Generator) -> np.ndarray:
    """Direct unconditional sampling: iid observations, then conditional weights."""
    comps = rng_x.multinomial(n, mu_mass, size=reps)
    s = mu_mass.size
    out = np.empty((reps, s))
    v = scheme.variant
    if v == "m_out_of_n":
        m = scheme.m_of_n(n)
        for i in range(reps):
            out[i] = rng_w.multinomial(m, comps[i] / n) / m
        return out
    if v == "delete_h":
        h = scheme.h_of_n(n)
        for i in range(reps):
            if h == 0:
                out[i] = comps[i] / n
            else:
                zeros = rng_w.multivariate_hypergeometric(comps[i], h)
                out[i] = (comps[i] - zeros) * (n / (n - h)) / n
        return out
    if v == "hypergeometric":
        for i in range(reps):
            out[i] = rng_w.multivariate_hypergeometric(comps[i] * scheme.K, n) / n
        return out
    for i in range(reps):
        out[i] = batch_conditional_masses(scheme, comps[i], n, 1, rng_w)[0]
    return out


# -----------------------------------------------------------------------------
# Estimators
# -----------------------------------------------------------------------------
def _tilted_conditional_chunk(n, m, counts, nu_mass, eps, reps, rng, tilt):
    """(sum v, sum v^2, hits) for the tilted multinomial estimator on one chunk."""
    p_groups = counts / n
    g = rng.multinomial(m, tilt, size=reps)
    masses = g / m
    tv = 0.5 * np.abs(masses - nu_mass).sum(axis=1)
    hit = tv < eps
    with np.errstate(divide="ignore", invalid="ignore"):
        logratio = np.log(p_groups) - np.log(tilt)
        terms = np.where(g > 0, g * logratio, 0.0)
    v = np.where(hit, np.exp(terms.sum(axis=1)), 0.0)
    return float(v.sum()), float((v * v).sum()), int(hit.sum())


def tilted_efron_estimator(n: int, m: int, composition, nu: FiniteMeasure,
                           epsilon: float, replications: int,
                           rng: np.random.Generator,
                           tilt: FiniteMeasure | None = None) -> tuple[float, float]:
    """Unbiased tilted estimate of P(TV(L^n, nu) < eps) for the m-out-of-n scheme.

    Ball counts are drawn from Multinomial(m, tilt) -- by default the
    tilted cell law proportional to mu_a * (nu_a / mu_a), whose group
    totals are exactly nu -- and every sample is reweighted by the exact
    likelihood ratio prod_a (mu_a / tilt_a)^{G_a}.  With tilt equal to
    the composition the likelihood ratio is one and this is the direct
    estimator.
    """
    counts = np.asarray(composition, dtype=int)
    if counts.sum() != n:
        raise ConfigError("composition must sum to n")
    nu_mass = nu.mass
    tilt_mass = tilt.mass if tilt is not None else nu_mass / nu_mass.sum()
    p_groups = counts / n
    needs = p_groups > 0.0
    if np.any(needs & (tilt_mass == 0.0)):
        raise DegenerateEstimatorError(
            "tilt puts zero mass on a populated symbol; the reweighted "
            "estimator cannot see events charging it")
    sv = sq = 0.0
    done = 0
    chunk_idx = 0
    while done < replications:
        reps = min(CHUNK_SIZE, replications - done)
        a, b, _ = _tilted_conditional_chunk(n, m, counts, nu_mass, epsilon,
                                            reps, rng, tilt_mass)
        sv += a
        sq += b
        done += reps
        chunk_idx += 1
    r = replications
    p_hat = sv / r
    var = max(sq / r - p_hat * p_hat, 0.0)
    return p_hat, math.sqrt(var / r)


def _tilted_unconditional_chunk(n, m, mu_mass, nu_mass, eps, reps, rng_w, rng_x,
                                zeta, tilt):
    """Two-stage product tilt: compositions from zeta, ball counts from tilt.

    log LR = sum_a C_a log(mu_a/zeta_a) + sum_a G_a log(C_a/(n tilt_a));
    rows where some tilt-charged symbol has no observations get LR 0,
    which is exact (those outcomes are impossible under the original law
    only in the weight factor, and the indicator kills feasible ones).
    """
    comps = rng_x.multinomial(n, zeta, size=reps)
    g = rng_w.multinomial(m, tilt, size=reps)
    masses = g / m
    tv = 0.5 * np.abs(masses - nu_mass).sum(axis=1)
    hit = tv < eps
    with np.errstate(divide="ignore", invalid="ignore"):
        obs_ratio = np.log(mu_mass) - np.log(zeta)
        log_obs = np.where(comps > 0, comps * obs_ratio, 0.0).sum(axis=1)
        logc = np.log(comps / n)
        terms = np.where(g > 0, g * (logc - np.log(tilt)), 0.0)
    log_w = terms.sum(axis=1)
    v = np.where(hit, np.exp(log_obs + log_w), 0.0)
    return float(v.sum()), float((v * v).sum()), int(hit.sum())


# -----------------------------------------------------------------------------
# Slope fitting and ball infima
# -----------------------------------------------------------------------------
def fit_rate_slope(points, weights=None) -> tuple[float, float]:
    """Weighted least squares of -log(p) on the speed variable, with intercept.

    ``points`` is a list of (speed, log_p) pairs; ``weights`` are
    inverse variances of log_p (uniform when omitted).  Returns the slope
    and its standard error.
    """
    pts = [(x, y) for x, y in points if y is not None and math.isfinite(y)]
    if len(pts) < 3:
        raise InsufficientDataError(f"need >= 3 finite points, got {len(pts)}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([-p[1] for p in pts], dtype=float)
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=float)
        if w.size != x.size or np.any(w <= 0):
            raise InsufficientDataError("weights must be positive, one per finite point")
    wsum = w.sum()
    xbar = (w * x).sum() / wsum
    ybar = (w * y).sum() / wsum
    sxx = (w * (x - xbar) ** 2).sum()
    slope = (w * (x - xbar) * (y - ybar)).sum() / sxx
    if weights is None:
        resid = y - ybar - slope * (x - xbar)
        dof = max(len(pts) - 2, 1)
        sigma2 = (resid ** 2).sum() / dof
        stderr = math.sqrt(sigma2 / sxx)
    else:
        stderr = math.sqrt(1.0 / sxx)
    return float(slope), float(stderr)


def tv_ball_infimum(rate_fn, nu: FiniteMeasure, eps: float,
                    tol: float = 1e-10) -> tuple[float, FiniteMeasure]:
    """inf of a convex rate over the closed TV ball around nu (two symbols).

    On a binary alphabet the ball is the interval |t - nu_1| <= eps, so
    golden section on t is exact for convex rates.
    """
    if nu.alphabet_size != 2:
        raise DimensionError("exact ball infimum implemented for two symbols")
    lo = max(0.0, nu.mass[0] - eps)
    hi = min(1.0, nu.mass[0] + eps)

    def f(t):
        return rate_fn(FiniteMeasure([t, 1.0 - t]))

    golden = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - golden * (b - a)
    x2 = a + golden * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - golden * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + golden * (b - a)
            f2 = f(x2)
    tm = 0.5 * (a + b)
    point = FiniteMeasure([tm, 1.0 - tm])
    val = f(tm)
    for t_end in (lo, hi):
        v = rate_fn(FiniteMeasure([t_end, 1.0 - t_end]))
        if v < val:
            val, point = v, FiniteMeasure([t_end, 1.0 - t_end])
    return val, point


# -----------------------------------------------------------------------------
# Experiment runners
# -----------------------------------------------------------------------------
def _chunks(total: int):
    idx = 0
    done = 0
    while done < total:
        reps = min(CHUNK_SIZE, total - done)
        yield idx, reps
        done += reps
        idx += 1


def _conditional_chunk_task(doc: dict, n_idx: int, chunk_idx: int, reps: int,
                            tilt: tuple | None):
    exp = LdpExperiment.from_doc(doc)
    n = exp.n_values[n_idx]
    counts = composition_counts(exp.observations_mass, n)
    rng = stream(exp.seed, WEIGHTS_STREAM, n_idx, chunk_idx)
    nu_mass = np.array(exp.target)
    if exp.estimator == "tilted":
        m = exp.scheme.m_of_n(n)
        return _tilted_conditional_chunk(n, m, counts, nu_mass, exp.epsilon,
                                         reps, rng, np.array(tilt))
    masses = batch_conditional_masses(exp.scheme, counts, n, reps, rng)
    tv = 0.5 * np.abs(masses - nu_mass).sum(axis=1)
    hit = tv < exp.epsilon
    h = int(hit.sum())
    return float(h), float(h), h


def _unconditional_chunk_task(doc: dict, n_idx: int, chunk_idx: int, reps: int,
                              proposal: tuple | None):
    exp = LdpExperiment.from_doc(doc)
    n = exp.n_values[n_idx]
    rng_w = stream(exp.seed, WEIGHTS_STREAM, n_idx, chunk_idx)
    rng_x = stream(exp.seed, OBSERVATIONS_STREAM, n_idx, chunk_idx)
    mu_mass = np.array(exp.observations_mass)
    nu_mass = np.array(exp.target)
    if exp.estimator == "tilted":
        zeta, tilt = proposal
        m = exp.scheme.m_of_n(n)
        return _tilted_unconditional_chunk(n, m, mu_mass, nu_mass, exp.epsilon,
                                           reps, rng_w, rng_x,
                                           np.array(zeta), np.array(tilt))
    masses = _unconditional_masses(exp.scheme, mu_mass, n, reps, rng_w, rng_x)
    tv = 0.5 * np.abs(masses - nu_mass).sum(axis=1)
    hit = tv < exp.epsilon
    h = int(hit.sum())
    return float(h), float(h), h


def _reduce_run(exp: LdpExperiment, task, task_arg, workers: int) -> RateEstimate:
    doc = exp.to_doc()
    jobs = [(n_idx, chunk_idx, reps)
            for n_idx in range(len(exp.n_values))
            for chunk_idx, reps in _chunks(exp.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(n_idx, chunk_idx): pool.submit(task, doc, n_idx, chunk_idx,
                                                       reps, task_arg)
                       for n_idx, chunk_idx, reps in jobs}
            results = {key: fut.result() for key, fut in futures.items()}
    else:
        results = {(n_idx, chunk_idx): task(doc, n_idx, chunk_idx, reps, task_arg)
                   for n_idx, chunk_idx, reps in jobs}

    per_n = []
    r = exp.replications
    for n_idx, n in enumerate(exp.n_values):
        sv = sq = 0.0
        hits = 0
        for chunk_idx, _ in _chunks(r):
            a, b, h = results[(n_idx, chunk_idx)]
            sv += a
            sq += b
            hits += h
        p_hat = sv / r
        if exp.estimator == "tilted":
            var = max(sq / r - p_hat * p_hat, 0.0)
            stderr = math.sqrt(var / r)
        else:
            stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / r)
        speed_value = exp.scheme.m_of_n(n) if exp.speed == "m_of_n" else n
        if p_hat > 0.0:
            per_n.append(PerNEstimate(n, speed_value, hits, p_hat, stderr,
                                      math.log(p_hat)))
        else:
            per_n.append(PerNEstimate(n, speed_value, hits, 0.0, stderr, None,
                                      missing=True,
                                      note="zero hits: use the tilted estimator"))
    finite = [e for e in per_n if not e.missing]
    fit_points = finite[-3:] if len(finite) >= 3 else finite
    try:
        weights = []
        for e in fit_points:
            rel = e.stderr / e.p_hat if e.p_hat > 0 else math.inf
            weights.append(1.0 / max(rel * rel, 1e-12))
        slope, se = fit_rate_slope([(e.speed_value, e.log_p) for e in fit_points],
                                   weights)
    except InsufficientDataError:
        slope, se = math.nan, math.nan
    return RateEstimate(per_n, slope, se, speed=exp.speed)


def run_conditional_ldp(exp: LdpExperiment, workers: int = 1,
                        tilt: FiniteMeasure | None = None) -> RateEstimate:
    """Estimate the conditional decay rate on a fixed composition.

    For the tilted estimator the proposal defaults to the rate-function
    ball minimizer on binary alphabets (variance stays polynomial there),
    to the experiment's ``tilt_target`` if given, and to the target
    otherwise.
    """
    if exp.observations_mode != "composition":
        raise ConfigError("conditional runs need composition observations")
    for n in exp.n_values:
        composition_counts(exp.observations_mass, n)
    tilt_tuple = None
    if exp.estimator == "tilted":
        if tilt is not None:
            tilt_tuple = tuple(tilt.mass)
        elif exp.tilt_target is not None:
            tilt_tuple = tuple(exp.tilt_target)
        else:
            tilt_tuple = tuple(_default_conditional_tilt(exp).mass)
        _check_tilt(exp, tilt_tuple)
    return _reduce_run(exp, _conditional_chunk_task, tilt_tuple, workers)


def _default_conditional_tilt(exp: LdpExperiment) -> FiniteMeasure:
    from .rates import rate_efron

    nu = exp.target_measure()
    mu = exp.observations_measure()
    if nu.alphabet_size != 2:
        return nu
    _, point = tv_ball_infimum(lambda x: rate_efron(x, mu, 1.0), nu, exp.epsilon)
    return point


def _check_tilt(exp: LdpExperiment, tilt_tuple) -> None:
    tilt = np.array(tilt_tuple)
    mu = np.array(exp.observations_mass)
    if np.any((mu > 0.0) & (tilt == 0.0)):
        raise DegenerateEstimatorError(
            "tilt puts zero mass on a populated symbol")


def run_unconditional_ldp(exp: LdpExperiment, workers: int = 1,
                          proposal: tuple | None = None) -> RateEstimate:
    """Estimate the unconditional decay rate with iid observations.

    The tilted estimator (m-out-of-n only) uses a two-stage product
    proposal: compositions drawn iid from the optimal smoothing law
    zeta* and ball counts from the ball minimizer of the unconditional
    rate, both found analytically unless supplied.
    """
    if exp.observations_mode != "iid":
        raise ConfigError("unconditional runs need iid observations")
    arg = None
    if exp.estimator == "tilted":
        if proposal is None:
            proposal = _default_unconditional_proposal(exp)
        zeta, tilt = proposal
        _check_tilt(exp, tilt)
        if np.any(np.asarray(zeta) <= 0.0):
            raise DegenerateEstimatorError("proposal zeta must charge every symbol")
        arg = (tuple(zeta), tuple(tilt))
    return _reduce_run(exp, _unconditional_chunk_task, arg, workers)


def _default_unconditional_proposal(exp: LdpExperiment):
    from .rates import RateFunctionSpec, rate_efron, rate_unconditional

    nu = exp.target_measure()
    mu = exp.observations_measure()
    lam = exp.scheme.lam
    ix = RateFunctionSpec.entropy_to(mu)

    def k_of(x: FiniteMeasure) -> float:
        val, _ = rate_unconditional(x, ix, lambda a, z: rate_efron(a, z, lam),
                                    tol=1e-6)
        return val

    if nu.alphabet_size == 2:
        _, ball_min = tv_ball_infimum(k_of, nu, exp.epsilon, tol=1e-6)
    else:
        ball_min = nu
    _, zeta_star = rate_unconditional(ball_min, ix,
                                      lambda a, z: rate_efron(a, z, lam), tol=1e-8)
    return tuple(zeta_star.mass), tuple(ball_min.mass)
