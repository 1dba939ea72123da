"""Exchangeable weight samplers and observation samplers.

Every scheme returns a nonnegative weight vector summing to n: exactly in
integer arithmetic for the integer-valued schemes, within 1e-9*n in
floating point for the self-normalized iid scheme.  All randomness flows
through explicit ``numpy.random.Generator`` handles (PCG64); independent
streams are derived from one seed by :func:`stream`, which keys a
``SeedSequence`` with a fixed tree position, so weight and observation
draws are independent and reproducible across platforms.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .measures import FiniteMeasure

WEIGHTS_STREAM = 0
OBSERVATIONS_STREAM = 1


def stream(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator at a fixed position in the seed-derivation tree.

    Distinct paths give statistically independent streams.  Conventions
    used by the Monte Carlo harness: ``(WEIGHTS_STREAM, n_index, chunk)``
    for weights and ``(OBSERVATIONS_STREAM, n_index, chunk)`` for
    observations.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(path)))


# -----------------------------------------------------------------------------
# Individual samplers
# -----------------------------------------------------------------------------
def sample_multinomial_weights(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """"m out of n" weights: (n/m) * Multinomial(m, uniform) counts.

    numpy's multinomial is the sequential binomial-conditional algorithm,
    so the counts are exact; the returned floats sum to n within 1e-12*n.
    """
    if n < 1 or m < 1:
        raise ConfigError("n and m must be positive")
    counts = rng.multinomial(m, np.full(n, 1.0 / n))
    return (n / m) * counts


@dataclass(frozen=True)
class CouplingOutcome:
    """Result of coupling iid Poisson urn counts to a multinomial vector.

    ``m_vec - z`` is sign-uniform (all >= 0 or all <= 0) and
    ``sum |m_vec - z| = moved_mass = |sum z - m|``.
    """

    z: np.ndarray
    m_vec: np.ndarray
    moved_mass: int

    def check(self, m: int) -> None:
        if int(self.m_vec.sum()) != m:
            raise AssertionError("coupled vector does not sum to m")
        diff = self.m_vec - self.z
        if not ((diff >= 0).all() or (diff <= 0).all()):
            raise AssertionError("sign-uniformity violated")
        if int(np.abs(diff).sum()) != self.moved_mass:
            raise AssertionError("moved mass does not match the total discrepancy")


def couple_poisson_multinomial(n: int, m: int, rng: np.random.Generator) -> CouplingOutcome:
    """Couple iid Poisson(m/n) urn counts Z to an exact Multinomial(m, uniform).

    If the Z total overshoots m, the excess balls are removed uniformly at
    random from the ball population (a multivariate hypergeometric pick of
    the kept balls); if it undershoots, each missing ball lands in a
    uniform urn.  The output M is Mult_n(m, uniform)-distributed and the
    coupling is W1-optimal among weight vectors summing to n.
    """
    if n < 1 or m < 1:
        raise ConfigError("n and m must be positive")
    z = rng.poisson(m / n, size=n)
    s = int(z.sum())
    if s == m:
        m_vec = z.copy()
    elif s > m:
        m_vec = rng.multivariate_hypergeometric(z, m)
    else:
        m_vec = z + rng.multinomial(m - s, np.full(n, 1.0 / n))
    return CouplingOutcome(z=z, m_vec=np.asarray(m_vec), moved_mass=abs(s - m))


def sample_iid_weights(n: int, grid, probs, rng: np.random.Generator) -> np.ndarray:
    """Self-normalized iid weights W_i = Y_i / mean(Y) with Y_i drawn from a grid.

    The grid must be strictly positive (the scheme assumes P(Y=0) = 0).
    """
    g = np.asarray(grid, dtype=float)
    p = np.asarray(probs, dtype=float)
    if np.any(g <= 0.0):
        raise ConfigError("iid weight grid must be strictly positive")
    if g.shape != p.shape or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ConfigError("probs must be a probability vector matching the grid")
    y = g[rng.choice(g.size, size=n, p=p / p.sum())]
    return y / y.mean()


def sample_hypergeometric_weights(n: int, K: int, rng: np.random.Generator) -> np.ndarray:
    """Counts from drawing n items without replacement from K copies of each label.

    Exact sampling from the multivariate hypergeometric pmf; every count
    lies in {0, ..., K} and the total is n.
    """
    if n < 1:
        raise ConfigError("n must be positive")
    if int(K) != K or K < 2:
        raise ConfigError("K must be an integer >= 2")
    return rng.multivariate_hypergeometric(np.full(n, int(K)), n).astype(float)


def sample_jackknife_weights(n: int, h: int, rng: np.random.Generator) -> np.ndarray:
    """Delete-h weights: n/(n-h) on a uniform random set of n-h positions, else 0."""
    if not (0 <= h < n):
        raise ConfigError(f"h must satisfy 0 <= h < n, got h={h}, n={n}")
    template = np.zeros(n)
    template[: n - h] = n / (n - h)
    return rng.permutation(template)


def sample_deterministic_weights(template, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random permutation of a fixed nonnegative template summing to n."""
    t = np.asarray(template, dtype=float)
    n = t.size
    if np.any(t < 0):
        raise ConfigError("template must be nonnegative")
    if abs(t.sum() - n) > 1e-9 * n:
        raise ConfigError("template must sum to its own length")
    return rng.permutation(t)


def smooth_k_blocks(weights, k: int, style: str = "circular") -> np.ndarray:
    """Average weights over length-k index windows (indices modulo n).

    circular: window {i, ..., i+k-1}; moving: the k-term centered window
    {i - floor(k/2), ..., i + ceil(k/2) - 1}.  Requires k | n.  The total
    is preserved because every weight sits in exactly k windows.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    if k < 1:
        raise ConfigError("k must be >= 1")
    if n % k != 0:
        raise ConfigError(f"n={n} must be divisible by k={k}")
    if k == 1:
        return w.copy()
    wrapped = np.concatenate([w, w[: k - 1]])
    circ = np.convolve(wrapped, np.ones(k), mode="valid")[:n] / k
    if style == "circular":
        return circ
    if style == "moving":
        return np.roll(circ, k // 2)
    raise ConfigError(f"unknown block style {style!r}")


def sample_observations(law: FiniteMeasure, n: int, mode: str,
                        rng: np.random.Generator, urn_counts=None) -> np.ndarray:
    """Draw a symbol vector: iid from ``law`` or a shuffled fixed-composition urn.

    The caller supplies an observation stream independent of the weight
    stream; see :func:`stream`.
    """
    if mode == "iid":
        if not law.probability():
            raise ConfigError("iid observation law must be a probability")
        return rng.choice(law.alphabet_size, size=n, p=law.mass / law.total)
    if mode == "without_replacement":
        counts = np.asarray(urn_counts, dtype=int)
        if counts.sum() != n:
            raise ConfigError("urn counts must sum to n")
        return rng.permutation(np.repeat(np.arange(counts.size), counts))
    raise ConfigError(f"unknown observation mode {mode!r}")


# -----------------------------------------------------------------------------
# Scheme configuration
# -----------------------------------------------------------------------------
_VARIANTS = ("m_out_of_n", "iid_weighted", "hypergeometric", "deterministic",
             "delete_h", "k_blocks")


@dataclass(frozen=True)
class SchemeConfig:
    """One of the five weight schemes with its parameters.

    variant-specific fields:
      m_out_of_n      lam (asymptotic resampling ratio; m(n) = round(lam*n))
      iid_weighted    grid, probs (strictly positive finite law)
      hypergeometric  K
      deterministic   template (atoms summing to their length)
      delete_h        alpha in [0, 1); h(n) = round(alpha*n)
      k_blocks        k, style ("circular" | "moving"); requires k | n
    """

    variant: str
    lam: float | None = None
    grid: tuple = ()
    probs: tuple = ()
    K: int | None = None
    template: tuple = ()
    alpha: float | None = None
    k: int | None = None
    style: str = "circular"

    def __post_init__(self):
        v = self.variant
        if v not in _VARIANTS:
            raise ConfigError(f"unknown scheme variant {v!r}")
        if v == "m_out_of_n" and not (self.lam and self.lam > 0):
            raise ConfigError("m_out_of_n needs lam > 0")
        if v == "iid_weighted":
            if len(self.grid) == 0 or len(self.grid) != len(self.probs):
                raise ConfigError("iid_weighted needs matching grid and probs")
            if any(g <= 0 for g in self.grid):
                raise ConfigError("iid weight grid must be strictly positive")
        if v == "hypergeometric" and (self.K is None or self.K < 2):
            raise ConfigError("hypergeometric needs integer K >= 2")
        if v == "deterministic" and len(self.template) == 0:
            raise ConfigError("deterministic needs a template")
        if v == "delete_h" and not (self.alpha is not None and 0.0 <= self.alpha < 1.0):
            raise ConfigError("delete_h needs alpha in [0, 1)")
        if v == "k_blocks":
            if self.k is None or self.k < 1:
                raise ConfigError("k_blocks needs k >= 1")
            if self.style not in ("circular", "moving"):
                raise ConfigError("k_blocks style must be circular or moving")

    def m_of_n(self, n: int) -> int:
        if self.variant != "m_out_of_n":
            raise ConfigError("m(n) only applies to the m_out_of_n scheme")
        m = int(round(self.lam * n))
        if m < 1:
            raise ConfigError(f"m(n) = round({self.lam} * {n}) < 1")
        return m

    def h_of_n(self, n: int) -> int:
        if self.variant != "delete_h":
            raise ConfigError("h(n) only applies to the delete_h scheme")
        return int(round(self.alpha * n))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """One weight vector of length n under this scheme."""
        v = self.variant
        if v == "m_out_of_n":
            return sample_multinomial_weights(n, self.m_of_n(n), rng)
        if v == "iid_weighted":
            return sample_iid_weights(n, self.grid, self.probs, rng)
        if v == "hypergeometric":
            return sample_hypergeometric_weights(n, self.K, rng)
        if v == "deterministic":
            if len(self.template) != n:
                raise ConfigError("template length must equal n")
            return sample_deterministic_weights(self.template, rng)
        if v == "delete_h":
            return sample_jackknife_weights(n, self.h_of_n(n), rng)
        # k_blocks: smooth "n/k out of n" multinomial weights over windows
        if n % self.k != 0:
            raise ConfigError(f"k_blocks needs k | n, got n={n}, k={self.k}")
        counts = rng.multinomial(n // self.k, np.full(n, 1.0 / n))
        return smooth_k_blocks(self.k * counts, self.k, self.style)

    def to_doc(self) -> dict:
        v = self.variant
        if v == "m_out_of_n":
            return {"variant": v, "lambda": self.lam}
        if v == "iid_weighted":
            return {"variant": v, "grid": list(self.grid), "probs": list(self.probs)}
        if v == "hypergeometric":
            return {"variant": v, "K": self.K}
        if v == "deterministic":
            return {"variant": v, "template": list(self.template)}
        if v == "delete_h":
            return {"variant": v, "alpha": self.alpha}
        return {"variant": v, "k": self.k, "style": self.style}

    def to_json(self) -> str:
        return json.dumps(self.to_doc())

    @staticmethod
    def from_doc(doc: dict) -> "SchemeConfig":
        if not isinstance(doc, dict) or "variant" not in doc:
            raise ConfigError("scheme document needs a 'variant' field")
        v = doc["variant"]
        known = {
            "m_out_of_n": {"variant", "lambda"},
            "iid_weighted": {"variant", "grid", "probs"},
            "hypergeometric": {"variant", "K"},
            "deterministic": {"variant", "template"},
            "delete_h": {"variant", "alpha"},
            "k_blocks": {"variant", "k", "style"},
        }
        if v not in known:
            raise ConfigError(f"unknown scheme variant {v!r}")
        extra = set(doc) - known[v]
        if extra:
            raise ConfigError(f"unknown fields for {v}: {sorted(extra)}")
        missing = known[v] - set(doc) - {"style"}
        if missing:
            raise ConfigError(f"missing fields for {v}: {sorted(missing)}")
        if v == "m_out_of_n":
            return SchemeConfig(variant=v, lam=float(doc["lambda"]))
        if v == "iid_weighted":
            return SchemeConfig(variant=v, grid=tuple(map(float, doc["grid"])),
                                probs=tuple(map(float, doc["probs"])))
        if v == "hypergeometric":
            return SchemeConfig(variant=v, K=int(doc["K"]))
        if v == "deterministic":
            return SchemeConfig(variant=v, template=tuple(map(float, doc["template"])))
        if v == "delete_h":
            return SchemeConfig(variant=v, alpha=float(doc["alpha"]))
        return SchemeConfig(variant=v, k=int(doc["k"]),
                            style=doc.get("style", "circular"))

    @staticmethod
    def from_json(text: str) -> "SchemeConfig":
        return SchemeConfig.from_doc(json.loads(text))
