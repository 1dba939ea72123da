"""Finite-support measures, empirical weight measures, and the metrics on them.

The package works on a fixed finite alphabet of symbol indices ``0..s-1``.
Probability vectors live in :class:`FiniteMeasure`; empirical measures of
nonnegative weights (one atom per sample point, multiplicity 1/n) live in
:class:`AtomicWeightMeasure`; joint laws on ``weight-grid x alphabet`` live
in :class:`JointFiniteMeasure` with per-symbol conditionals in
:class:`Kernel`.

Conventions: ``0 * log 0 = 0`` and ``x * log(x/0) = +inf`` for ``x > 0``.
Distances: Wasserstein-1 on the line via sorted quantiles (optimal for
equal-size atomic measures), total variation on the alphabet (stands in
for the bounded-Lipschitz metric, which it is topologically equivalent to
on a finite discrete space).
"""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import ContractError, DimensionError

# Tolerances used by constructors and predicates.
_PROB_TOL = 1e-9
_SUM_TOL = 1e-12


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and nonnegative")
    return arr


# -----------------------------------------------------------------------------
# Domain types
# -----------------------------------------------------------------------------
class FiniteMeasure:
    """Nonnegative masses on an indexed finite alphabet.

    Parameters
    ----------
    mass : array-like of float
        Nonnegative mass per symbol ``0..s-1``.

    Attributes
    ----------
    alphabet_size : int
    mass : np.ndarray
        Read-only mass vector.
    total : float
        Cached sum of masses; the measure is a probability when
        ``|total - 1| <= 1e-9``.
    """

    __slots__ = ("mass", "alphabet_size", "total")

    def __init__(self, mass):
        arr = _as_vector(mass, "mass")
        if arr.size == 0:
            raise ValueError("alphabet must be nonempty")
        arr = arr.copy()
        arr.setflags(write=False)
        self.mass = arr
        self.alphabet_size = int(arr.size)
        self.total = float(arr.sum())

    def probability(self) -> bool:
        """True when the total mass is 1 within 1e-9."""
        return abs(self.total - 1.0) <= _PROB_TOL

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.mass > 0.0)

    @classmethod
    def uniform(cls, s: int) -> "FiniteMeasure":
        return cls(np.full(s, 1.0 / s))

    @classmethod
    def point(cls, s: int, index: int) -> "FiniteMeasure":
        mass = np.zeros(s)
        mass[index] = 1.0
        return cls(mass)

    def to_json(self) -> str:
        return json.dumps({"alphabet": self.alphabet_size, "mass": list(map(float, self.mass))})

    @classmethod
    def from_json(cls, text: str) -> "FiniteMeasure":
        doc = json.loads(text)
        m = cls(doc["mass"])
        if int(doc["alphabet"]) != m.alphabet_size:
            raise DimensionError("declared alphabet size disagrees with mass length")
        return m

    def to_csv_row(self) -> str:
        return ",".join(repr(float(x)) for x in self.mass)

    def __repr__(self) -> str:
        return f"FiniteMeasure({np.array2string(self.mass, precision=6)})"


class AtomicWeightMeasure:
    """Empirical measure ``(1/n) sum_i delta_{w_i}`` of n nonnegative atoms.

    Houses sampled weight vectors viewed as measures on the half-line.
    """

    __slots__ = ("atoms", "n")

    def __init__(self, atoms):
        arr = _as_vector(atoms, "atoms")
        if arr.size == 0:
            raise ValueError("need at least one atom")
        arr = arr.copy()
        arr.setflags(write=False)
        self.atoms = arr
        self.n = int(arr.size)

    def mean(self) -> float:
        return float(self.atoms.mean())

    def mean_one(self) -> bool:
        """Weight-sampler output has atoms averaging 1 within 1e-9."""
        return abs(self.mean() - 1.0) <= _PROB_TOL

    def to_json(self) -> str:
        return json.dumps({"atoms": list(map(float, self.atoms))})

    @classmethod
    def from_json(cls, text: str) -> "AtomicWeightMeasure":
        return cls(json.loads(text)["atoms"])

    def __repr__(self) -> str:
        return f"AtomicWeightMeasure(n={self.n}, mean={self.mean():.6f})"


class JointFiniteMeasure:
    """Probability mass on ``weight_grid x alphabet`` (rows index the grid).

    Membership in the mean-one class requires the grid-weighted first
    marginal to average 1:  ``sum_i grid_i * row_mass_i ~= 1``.
    """

    __slots__ = ("mass", "weight_grid", "rows", "cols")

    def __init__(self, mass, weight_grid):
        arr = np.asarray(mass, dtype=float)
        if arr.ndim != 2:
            raise DimensionError("joint mass must be a matrix")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("joint mass must be finite and nonnegative")
        grid = np.asarray(weight_grid, dtype=float)
        if grid.ndim != 1 or grid.size != arr.shape[0]:
            raise DimensionError("weight_grid length must match row count")
        arr = arr.copy()
        arr.setflags(write=False)
        grid = grid.copy()
        grid.setflags(write=False)
        self.mass = arr
        self.weight_grid = grid
        self.rows, self.cols = map(int, arr.shape)

    def marginal_1(self) -> np.ndarray:
        """Row sums: the law of the weight coordinate."""
        return self.mass.sum(axis=1)

    def marginal_2(self) -> FiniteMeasure:
        """Column sums as a measure on the alphabet."""
        return FiniteMeasure(self.mass.sum(axis=0))

    def weight_mean(self) -> float:
        return float(self.weight_grid @ self.marginal_1())

    def mean_one(self) -> bool:
        return abs(self.weight_mean() - 1.0) <= _PROB_TOL

    def __repr__(self) -> str:
        return f"JointFiniteMeasure(rows={self.rows}, cols={self.cols})"


class Kernel:
    """Per-symbol conditional laws over a common weight grid.

    ``cond[x]`` is a probability vector over ``weight_grid`` for each
    alphabet symbol x; rows must each sum to 1 within 1e-9.
    """

    __slots__ = ("cond", "weight_grid", "alphabet_size")

    def __init__(self, cond, weight_grid):
        arr = np.asarray(cond, dtype=float)
        if arr.ndim != 2:
            raise DimensionError("kernel must be a matrix (alphabet x grid)")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("kernel rows must be finite and nonnegative")
        row_sums = arr.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > _PROB_TOL):
            raise ValueError("each conditional slice must be a probability vector")
        grid = np.asarray(weight_grid, dtype=float)
        if grid.size != arr.shape[1]:
            raise DimensionError("weight_grid length must match kernel columns")
        arr = arr.copy()
        arr.setflags(write=False)
        grid = grid.copy()
        grid.setflags(write=False)
        self.cond = arr
        self.weight_grid = grid
        self.alphabet_size = int(arr.shape[0])

    def conditional_mean(self, x: int) -> float:
        return float(self.cond[x] @ self.weight_grid)

    def join(self, base: FiniteMeasure) -> JointFiniteMeasure:
        """Attach the kernel to a base law on the alphabet: rho_x (x) base."""
        if base.alphabet_size != self.alphabet_size:
            raise DimensionError("kernel and base alphabet sizes differ")
        joint = (self.cond * base.mass[:, None]).T
        return JointFiniteMeasure(joint, self.weight_grid)


# -----------------------------------------------------------------------------
# Entropy and metrics
# -----------------------------------------------------------------------------
def _check_prob_pair(nu: FiniteMeasure, mu: FiniteMeasure) -> None:
    if nu.alphabet_size != mu.alphabet_size:
        raise DimensionError(
            f"alphabet mismatch: {nu.alphabet_size} vs {mu.alphabet_size}"
        )
    if not nu.probability() or not mu.probability():
        raise ValueError("relative entropy needs probability measures")


def relative_entropy_vec(p: np.ndarray, q: np.ndarray) -> float:
    """H(p|q) for raw nonnegative vectors of equal total (in nats)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pos = p > 0.0
    if np.any(q[pos] == 0.0):
        return math.inf
    val = float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
    return max(val, 0.0) if val > -1e-12 else val


def relative_entropy(nu: FiniteMeasure, mu: FiniteMeasure) -> float:
    """Relative entropy H(nu|mu) = sum nu_i log(nu_i/mu_i), in nats.

    Returns +inf when absolute continuity fails (some nu_i > 0 with
    mu_i = 0). Always >= 0 for probability pairs.
    """
    _check_prob_pair(nu, mu)
    return relative_entropy_vec(nu.mass, mu.mass)


def entropy_chain_check(joint: JointFiniteMeasure, ref: JointFiniteMeasure) -> tuple[float, float]:
    """Evaluate both sides of the entropy chain rule on a shared first marginal.

    With theta the common weight-marginal, returns the pair

        ( H(joint|ref),  integral of H(joint_w | ref_w) theta(dw) )

    which must agree. Raises :class:`ContractError` when the two joints do
    not share their first marginal cellwise within 1e-9.
    """
    if joint.rows != ref.rows or joint.cols != ref.cols:
        raise DimensionError("joint shapes differ")
    if not np.allclose(joint.weight_grid, ref.weight_grid):
        raise DimensionError("weight grids differ")
    theta = joint.marginal_1()
    theta_ref = ref.marginal_1()
    if np.any(np.abs(theta - theta_ref) > _PROB_TOL):
        raise ContractError("first marginals must match cellwise within 1e-9")

    direct = relative_entropy_vec(joint.mass.ravel(), ref.mass.ravel())

    integrated = 0.0
    for i in range(joint.rows):
        t = theta[i]
        if t <= 0.0:
            continue
        h = relative_entropy_vec(joint.mass[i] / t, ref.mass[i] / theta_ref[i])
        if math.isinf(h):
            return direct, math.inf
        integrated += t * h
    return direct, integrated


def w1_line(a: AtomicWeightMeasure, b: AtomicWeightMeasure) -> float:
    """Wasserstein-1 distance between equal-size atomic measures on the line.

    Computed by the sorted-quantile coupling (1/n) sum |a_(i) - b_(i)|,
    which is optimal among all couplings; unequal atom counts are out of
    scope and rejected.
    """
    if a.n != b.n:
        raise DimensionError(f"atom counts differ: {a.n} vs {b.n}")
    return float(np.abs(np.sort(a.atoms) - np.sort(b.atoms)).mean())


def tv_distance(nu: FiniteMeasure, mu: FiniteMeasure) -> float:
    """Total variation (1/2) sum |nu_i - mu_i| between probability vectors."""
    _check_prob_pair(nu, mu)
    return 0.5 * float(np.abs(nu.mass - mu.mass).sum())


def bounded_metric(x: float, y: float) -> float:
    """Bounded companion of |x-y|:  |x-y| / (1 + |x-y|), valued in [0, 1)."""
    d = abs(x - y)
    return d / (1.0 + d)


def rebalance_atoms(a: AtomicWeightMeasure, rng: np.random.Generator) -> AtomicWeightMeasure:
    """Adjust atoms at uniformly random sites until they sum to n exactly.

    Three cases on the current total S vs n: equal leaves the atoms
    untouched; S > n repeatedly picks a positive-mass site uniformly and
    removes up to one unit of mass; S < n repeatedly picks a site
    uniformly and deposits up to one unit.  Every site only ever moves in
    one direction, so W1(input, output) <= |mean(input) - 1|.
    """
    n = a.n
    atoms = a.atoms.copy()
    total = float(atoms.sum())
    excess = total - n
    if abs(excess) <= _SUM_TOL * n:
        return AtomicWeightMeasure(a.atoms)

    if excess > 0:
        remaining = excess
        while remaining > _SUM_TOL * n:
            positive = np.flatnonzero(atoms > 0.0)
            site = int(rng.choice(positive))
            take = min(1.0, atoms[site], remaining)
            atoms[site] -= take
            remaining -= take
    else:
        remaining = -excess
        while remaining > _SUM_TOL * n:
            site = int(rng.integers(n))
            put = min(1.0, remaining)
            atoms[site] += put
            remaining -= put

    # force the exact total; the residual is below 1e-12 * n by construction
    atoms *= n / atoms.sum()
    return AtomicWeightMeasure(atoms)


def push_forward_scale(a: AtomicWeightMeasure, m: float) -> AtomicWeightMeasure:
    """Law of X/m when X has law ``a``: every atom is divided by m (m > 0)."""
    if not (m > 0.0):
        raise ValueError(f"scale must be positive, got {m}")
    return AtomicWeightMeasure(a.atoms / m)
