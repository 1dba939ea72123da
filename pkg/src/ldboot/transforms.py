"""Cumulant generating functions and their Legendre transforms.

Three families of weight laws are built in, all with every exponential
moment finite:

* ``scaled_poisson(lam)`` -- the law of Y with lam*Y Poisson(lam);
  Lambda(a) = lam*(exp(a/lam) - 1) and
  Lambda*(x) = lam - lam*x + lam*x*log(x).
* ``binomial(K)`` -- Binomial(K, 1/K), mean one;
  Lambda*(x) = x*log(x) + (K-x)*log((K-x)/(K-1)) on [0, K].
* ``tabulated(grid, mass)`` -- any law on a finite nonnegative grid.

``legendre_numeric`` inverts Lambda' by safeguarded Newton/bisection and
is checked against the closed forms; ``left_right_derivative_limits``
probes the two derivative limits that decide whether the generalized
Kullback inequality is an equality.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, NumericError


# -----------------------------------------------------------------------------
# CGF specifications
# -----------------------------------------------------------------------------
class CgfSpec:
    """A cumulant generating function with derivatives and support metadata.

    Subclasses provide ``value``, ``deriv``, ``deriv2`` (all defined on the
    whole real line), the support hull ``[support_min, support_max]``
    (``support_max`` may be +inf), log point masses at finite hull
    endpoints, and the mean.
    """

    kind = "abstract"

    def value(self, alpha: float) -> float:
        raise NotImplementedError

    def deriv(self, alpha: float) -> float:
        raise NotImplementedError

    def deriv2(self, alpha: float) -> float:
        raise NotImplementedError

    @property
    def support_min(self) -> float:
        raise NotImplementedError

    @property
    def support_max(self) -> float:
        raise NotImplementedError

    def log_mass_at_min(self) -> float:
        raise NotImplementedError

    def log_mass_at_max(self) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        return self.deriv(0.0)

    def to_json(self) -> str:
        return json.dumps(self._doc())

    def _doc(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_doc(doc: dict) -> "CgfSpec":
        kind = doc.get("kind")
        if kind == "scaled_poisson":
            return ScaledPoissonCgf(float(doc["lambda"]))
        if kind == "binomial":
            return BinomialCgf(int(doc["K"]))
        if kind == "tabulated":
            return TabulatedCgf(doc["grid"], doc["mass"])
        raise ConfigError(f"unknown CGF kind {kind!r}")

    @staticmethod
    def from_json(text: str) -> "CgfSpec":
        return CgfSpec.from_doc(json.loads(text))


class ScaledPoissonCgf(CgfSpec):
    """CGF of the law of Y with lam*Y ~ Poisson(lam); mean one, support [0, inf)."""

    kind = "scaled_poisson"

    def __init__(self, lam: float):
        if not (lam > 0.0):
            raise ValueError(f"lambda must be positive, got {lam}")
        self.lam = float(lam)

    def value(self, alpha):
        return self.lam * math.expm1(alpha / self.lam)

    def deriv(self, alpha):
        return math.exp(alpha / self.lam)

    def deriv2(self, alpha):
        return math.exp(alpha / self.lam) / self.lam

    @property
    def support_min(self):
        return 0.0

    @property
    def support_max(self):
        return math.inf

    def log_mass_at_min(self):
        # P(lam*Y = 0) = exp(-lam)
        return -self.lam

    def log_mass_at_max(self):
        raise ValueError("unbounded support has no upper endpoint mass")

    def _doc(self):
        return {"kind": "scaled_poisson", "lambda": self.lam}


class BinomialCgf(CgfSpec):
    """CGF of Binomial(K, 1/K); mean one, support {0, ..., K}."""

    kind = "binomial"

    def __init__(self, K: int):
        if int(K) != K or K < 2:
            raise ValueError(f"K must be an integer >= 2, got {K}")
        self.K = int(K)

    def value(self, alpha):
        K = self.K
        # K * log(1 + (e^a - 1)/K), stable for large |alpha|
        if alpha > 0:
            return K * (alpha + math.log((K - 1.0) * math.exp(-alpha) + 1.0) - math.log(K))
        return K * math.log1p(math.expm1(alpha) / K)

    def deriv(self, alpha):
        # K e^a / (K - 1 + e^a), evaluated on the non-overflowing side
        K = self.K
        if alpha < 0:
            e = math.exp(alpha)
            return K * e / (K - 1.0 + e)
        return K / ((K - 1.0) * math.exp(-alpha) + 1.0)

    def deriv2(self, alpha):
        # K (K-1) e^a / (K - 1 + e^a)^2
        K = self.K
        if alpha < 0:
            e = math.exp(alpha)
            return K * (K - 1.0) * e / (K - 1.0 + e) ** 2
        u = (K - 1.0) * math.exp(-alpha)
        return K * u / (u + 1.0) ** 2

    @property
    def support_min(self):
        return 0.0

    @property
    def support_max(self):
        return float(self.K)

    def log_mass_at_min(self):
        return self.K * math.log1p(-1.0 / self.K)

    def log_mass_at_max(self):
        return -self.K * math.log(self.K)

    def _doc(self):
        return {"kind": "binomial", "K": self.K}


class TabulatedCgf(CgfSpec):
    """CGF of a law on a finite nonnegative grid with given probabilities."""

    kind = "tabulated"

    def __init__(self, grid, mass):
        g = np.asarray(grid, dtype=float)
        p = np.asarray(mass, dtype=float)
        if g.ndim != 1 or g.shape != p.shape or g.size == 0:
            raise ValueError("grid and mass must be matching nonempty vectors")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("mass must be a probability vector")
        if np.any(g < 0):
            raise ValueError("grid points must be nonnegative")
        if np.unique(g).size != g.size:
            raise ValueError("grid points must be distinct")
        order = np.argsort(g)
        keep = p[order] > 0.0
        self.grid = g[order][keep]
        self.mass = p[order][keep]
        self.log_mass = np.log(self.mass)

    def value(self, alpha):
        return float(logsumexp(self.log_mass + alpha * self.grid))

    def tilted(self, alpha) -> np.ndarray:
        """The exponentially tilted law: mass_i e^{alpha w_i}, renormalized."""
        z = self.log_mass + alpha * self.grid
        z -= z.max()
        w = np.exp(z)
        return w / w.sum()

    def deriv(self, alpha):
        return float(self.tilted(alpha) @ self.grid)

    def deriv2(self, alpha):
        w = self.tilted(alpha)
        m = w @ self.grid
        return float(w @ (self.grid - m) ** 2)

    @property
    def support_min(self):
        return float(self.grid[0])

    @property
    def support_max(self):
        return float(self.grid[-1])

    def log_mass_at_min(self):
        return float(self.log_mass[0])

    def log_mass_at_max(self):
        return float(self.log_mass[-1])

    def _doc(self):
        return {"kind": "tabulated", "grid": list(map(float, self.grid)),
                "mass": list(map(float, self.mass))}


# -----------------------------------------------------------------------------
# Closed-form transforms
# -----------------------------------------------------------------------------
def cgf_scaled_poisson(lam: float, alpha: float) -> float:
    """Lambda(alpha) = lam * (exp(alpha/lam) - 1) for the scaled Poisson family."""
    if not (lam > 0.0):
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam * math.expm1(alpha / lam)


def legendre_scaled_poisson(lam: float, x: float) -> float:
    """Closed-form Legendre transform: lam - lam*x + lam*x*log(x) for x >= 0.

    The x = 0 value is the continuous limit lam; negative x gives +inf.
    """
    if not (lam > 0.0):
        raise ValueError(f"lambda must be positive, got {lam}")
    if x < 0.0:
        return math.inf
    if x == 0.0:
        return lam
    return lam - lam * x + lam * x * math.log(x)


def legendre_binomial(K: int, x: float) -> float:
    """Closed-form Legendre transform of Binomial(K, 1/K).

    x*log(x) + (K-x)*log((K-x)/(K-1)) on [0, K] with the endpoint values
    taken by continuity; +inf outside [0, K].
    """
    if int(K) != K or K < 2:
        raise ValueError(f"K must be an integer >= 2, got {K}")
    if x < 0.0 or x > K:
        return math.inf
    if x == 0.0:
        return K * math.log(K / (K - 1.0))
    if x == K:
        return K * math.log(K)
    return x * math.log(x) + (K - x) * math.log((K - x) / (K - 1.0))


# -----------------------------------------------------------------------------
# Numeric transform
# -----------------------------------------------------------------------------
@dataclass(frozen=True)
class LegendreResult:
    """Value of the transform and where the supremum is attained.

    ``argmax_alpha`` is +-inf when the supremum is a boundary limit
    (x at a support endpoint) and nan when the value is +inf.
    """

    value: float
    argmax_alpha: float


def legendre_numeric(cgf: CgfSpec, x: float, tol: float = 1e-12,
                     max_iter: int = 200) -> LegendreResult:
    """Evaluate sup_alpha { alpha*x - Lambda(alpha) } by solving Lambda'(alpha) = x.

    Lambda' is strictly increasing with range the open support hull, so a
    geometrically expanded bracket plus safeguarded Newton always
    converges in the interior.  At a finite hull endpoint the transform
    equals minus the log point mass there; outside the hull it is +inf.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    lo, hi = cgf.support_min, cgf.support_max
    if x < lo or x > hi:
        return LegendreResult(math.inf, math.nan)
    if x == lo:
        if math.isfinite(hi) and lo == hi:
            return LegendreResult(0.0, 0.0)  # point mass
        return LegendreResult(-cgf.log_mass_at_min(), -math.inf)
    if x == hi:
        return LegendreResult(-cgf.log_mass_at_max(), math.inf)

    # bracket Lambda'(a) = x by geometric expansion from [-1, 1]
    a, b = -1.0, 1.0
    for _ in range(max_iter):
        if cgf.deriv(a) < x:
            break
        a *= 2.0
    else:
        raise NumericError("bracket expansion failed on the left",
                           {"x": x, "alpha": a})
    for _ in range(max_iter):
        if cgf.deriv(b) > x:
            break
        b *= 2.0
    else:
        raise NumericError("bracket expansion failed on the right",
                           {"x": x, "alpha": b})

    alpha = 0.5 * (a + b)
    for _ in range(max_iter):
        g = cgf.deriv(alpha) - x
        if abs(g) <= tol * max(1.0, abs(x)):
            break
        if g > 0:
            b = alpha
        else:
            a = alpha
        h = cgf.deriv2(alpha)
        step = g / h if h > 0 else math.inf
        candidate = alpha - step
        if not (a < candidate < b):
            candidate = 0.5 * (a + b)  # bisection fallback
        alpha = candidate
        if b - a <= 1e-15 * max(1.0, abs(a), abs(b)):
            break
    else:
        raise NumericError("Newton/bisection did not converge",
                           {"x": x, "alpha": alpha, "residual": cgf.deriv(alpha) - x})
    return LegendreResult(alpha * x - cgf.value(alpha), alpha)


@dataclass(frozen=True)
class DerivativeLimitReport:
    """Numerical probe of lim Lambda'(alpha) as alpha -> -inf and +inf.

    ``satisfied`` is the equality condition for the generalized Kullback
    inequality: left limit 0 and unbounded growth on the right.
    """

    left_limit: float
    right_value: float
    right_unbounded: bool
    right_bound: float | None
    satisfied: bool


def gargamel_condition(cgf: CgfSpec, probe_alpha: float = 50.0) -> DerivativeLimitReport:
    """Probe the derivative limits of a CGF at several magnitudes of alpha.

    Exact verdicts for the built-in kinds: the scaled Poisson family
    satisfies the condition, Binomial(K, 1/K) has Lambda' <= K, and any
    tabulated law on [a, b] has derivative range (a, b).
    """
    if not (probe_alpha > 0.0):
        raise ValueError("probe_alpha must be positive")

    if isinstance(cgf, ScaledPoissonCgf):
        right_bound, unbounded = None, True
    elif isinstance(cgf, BinomialCgf):
        right_bound, unbounded = float(cgf.K), False
    else:
        right_bound, unbounded = cgf.support_max, False

    def safe_deriv(alpha):
        try:
            return cgf.deriv(alpha)
        except OverflowError:
            return math.inf

    mags = [probe_alpha * 10.0 ** j for j in range(3)]
    left_limit = safe_deriv(-mags[-1])
    right_value = max(safe_deriv(m) for m in mags)
    return DerivativeLimitReport(
        left_limit=left_limit,
        right_value=right_value,
        right_unbounded=unbounded,
        right_bound=right_bound,
        satisfied=(abs(left_limit) <= 1e-9 and unbounded),
    )
