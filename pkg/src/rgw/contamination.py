"""Contamination adversaries and distribution-family samplers.

The population-level adversaries are explicit measure constructions whose
total-variation budgets are certified at build time; the sample-level
adversary relocates a prescribed fraction of the points.  Samplers draw from
designated members of moment-bounded families, chosen so membership can be
checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .measures import DiscreteMeasure, point_mass, tv_distance

__all__ = [
    "ContaminationSpec",
    "FamilySpec",
    "TwoPointPair",
    "two_point_pair",
    "mirror_blend",
    "far_outlier",
    "corrupt_samples",
    "sample_family",
    "random_discrete_measure",
]

_CONTAMINATION_KINDS = ("two_point", "far_outlier", "mirror_blend", "sample_replacement")
_FAMILIES = ("bounded_moment_k", "sub_gaussian", "sliced_moment_k")


@dataclass
class ContaminationSpec:
    """How to corrupt: TV budget, attack kind, kind-specific parameters, seed."""

    eps: float
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        if self.kind not in _CONTAMINATION_KINDS:
            raise ValueError(f"unknown contamination kind {self.kind!r}")


@dataclass
class FamilySpec:
    """A distribution family plus the designated member the samplers draw from.

    ``member`` selects between the two-atom member and a radially heavy-tailed
    (Pareto) member for the k-th moment family; ``member_eps`` is the atom
    mass of the two-atom and sliced-moment members (their lower-bound role
    ties the member to a contamination level).
    """

    family: str
    sigma: float
    k: float = 4.0
    dim: int = 1
    member: str = "two_atom"
    member_eps: float | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.family != "sub_gaussian" and self.k < 4:
            raise ValueError("moment order k must be at least 4")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.member not in ("two_atom", "pareto"):
            raise ValueError(f"unknown designated member {self.member!r}")


@dataclass(frozen=True)
class TwoPointPair:
    """The two-point construction: indistinguishable clean pairs and their gap.

    ``mu1 = (1-eps) delta_0 + eps delta_a`` with ``a = sigma * eps^(-1/k)``
    sits exactly on the k-th moment boundary.  Both clean pairs (mu1, nu) and
    (alt_mu, alt_nu) = (delta_0, delta_0) are compatible with the observed
    pair, which forces any estimator to err by the gap on one of them.
    """

    mu1: DiscreteMeasure
    nu: DiscreteMeasure
    observed_mu: DiscreteMeasure
    observed_nu: DiscreteMeasure
    alt_mu: DiscreteMeasure
    alt_nu: DiscreteMeasure
    gap: float
    atom_location: float


def two_point_gap(sigma: float, k: float, eps: float) -> float:
    """Exact alignment cost between the two-atom member and a point mass."""
    return math.sqrt(2.0 * (1.0 - eps)) * sigma**2 * eps ** (0.5 - 2.0 / k)


def two_point_pair(sigma: float, k: float, eps: float) -> TwoPointPair:
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1); the construction degenerates at 0")
    if k < 4:
        raise ValueError("moment order k must be at least 4")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a = sigma * eps ** (-1.0 / k)
    mu1 = DiscreteMeasure([[0.0], [a]], [1.0 - eps, eps])
    nu = point_mass([0.0])
    return TwoPointPair(
        mu1=mu1,
        nu=nu,
        observed_mu=mu1,
        observed_nu=nu,
        alt_mu=point_mass([0.0]),
        alt_nu=point_mass([0.0]),
        gap=two_point_gap(sigma, k, eps),
        atom_location=a,
    )


def mirror_blend(mu: DiscreteMeasure, nu: DiscreteMeasure, eps: float):
    """Cross-blend (1-eps) mu + eps nu and its mirror; TV budgets certified.

    The blended pair satisfies tv(mu~, nu~) = |1-2 eps| tv(mu, nu), which
    collapses to zero at eps = 1/2 and stays below 1 - 2 eps for eps <= 1/2.
    """
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if not (mu.is_probability and nu.is_probability):
        raise ValueError("mirror_blend requires probability measures")
    mu_t = DiscreteMeasure(
        np.vstack([mu.points, nu.points]),
        np.concatenate([mu.weights * (1.0 - eps), nu.weights * eps]),
    ).merged()
    nu_t = DiscreteMeasure(
        np.vstack([nu.points, mu.points]),
        np.concatenate([nu.weights * (1.0 - eps), mu.weights * eps]),
    ).merged()
    base = tv_distance(mu, nu)
    assert tv_distance(mu_t, mu) <= eps * base + 1e-12
    assert tv_distance(nu_t, nu) <= eps * base + 1e-12
    assert abs(tv_distance(mu_t, nu_t) - abs(1.0 - 2.0 * eps) * base) <= 1e-12
    return mu_t, nu_t


def far_outlier(mu: DiscreteMeasure, eps: float, R: float, direction_seed: int = 0):
    """Rescale mass by (1-eps) and plant an eps atom at distance R.

    The direction is a pseudo-random unit vector derived from
    ``direction_seed``; the TV distance to ``mu`` is at most eps, with
    equality whenever the planted atom misses the original support.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    if R <= 0:
        raise ValueError("R must be positive")
    if eps == 0.0:
        return mu
    rng = substream(direction_seed, "far-outlier-direction")
    u = rng.standard_normal(mu.dim)
    u /= np.linalg.norm(u)
    pts = np.vstack([mu.points, (R * u)[None, :]])
    w = np.concatenate([mu.weights * (1.0 - eps), [eps * mu.total_mass]])
    out = DiscreteMeasure(pts, w)
    assert tv_distance(out, mu) <= eps * mu.total_mass + 1e-12
    return out


def corrupt_samples(samples, eps: float, attack: ContaminationSpec):
    """Replace exactly ceil(eps * n) sample points according to ``attack``.

    The replacement relocates the chosen points to a single far location
    R * u (default R = 1000), the sample-level analogue of the far-outlier
    construction.  Returns the corrupted array and the modified index set.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = pts.shape[0]
    if n < 1:
        raise ValueError("need at least one sample")
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    n_bad = math.ceil(eps * n)
    if n_bad == 0:
        return pts.copy(), np.zeros(0, dtype=int)
    rng = substream(attack.seed, "corrupt-samples", attack.kind)
    idx = np.sort(rng.choice(n, size=n_bad, replace=False))
    R = float(attack.params.get("R", 1000.0))
    u = rng.standard_normal(pts.shape[1])
    u /= np.linalg.norm(u)
    out = pts.copy()
    out[idx] = R * u
    return out, idx


def _pareto_scale(sigma: float, k: float) -> tuple[float, float]:
    """Pareto tail alpha = k + 1/2 and support floor giving E r^k = sigma^k."""
    alpha = k + 0.5
    r0 = sigma * (alpha / (alpha - k)) ** (-1.0 / k)
    return alpha, r0


def sample_family(spec: FamilySpec, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. points from the designated member of the family.

    bounded_moment_k: two-atom member (mass member_eps at distance
    sigma * member_eps^(-1/k)) or a radially Pareto member with k-th moment
    exactly sigma^k and divergent (k+1/2)-th moment.  sub_gaussian: isotropic
    Gaussian with the largest variance admitted by the squared-exponential
    moment bound (met with equality).  sliced_moment_k: point mass blended
    with an isotropic Gaussian scaled so every 1-d projection meets the k-th
    moment bound.
    """
    if n < 1:
        raise ValueError("need n >= 1 samples")
    rng = substream(seed, "family-sample", spec.family, spec.member)
    d = spec.dim
    if spec.family == "bounded_moment_k":
        if spec.member == "two_atom":
            eps = _member_eps(spec)
            a = spec.sigma * eps ** (-1.0 / spec.k)
            pts = np.zeros((n, d))
            hit = rng.random(n) < eps
            pts[hit, 0] = a
            return pts
        alpha, r0 = _pareto_scale(spec.sigma, spec.k)
        radii = r0 * (1.0 - rng.random(n)) ** (-1.0 / alpha)
        dirs = rng.standard_normal((n, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return radii[:, None] * dirs
    if spec.family == "sub_gaussian":
        # E exp(Z^2/sigma^2) = (1 - 2 c^2/sigma^2)^(-1/2) <= 2  <=>  c^2 <= 3 sigma^2 / 8
        c = spec.sigma * math.sqrt(3.0 / 8.0)
        return c * rng.standard_normal((n, d))
    # sliced_moment_k
    eps = _member_eps(spec)
    c = spec.sigma * eps ** (-1.0 / spec.k) / math.sqrt(spec.k)
    pts = np.zeros((n, d))
    hit = rng.random(n) < eps
    pts[hit] = c * rng.standard_normal((int(hit.sum()), d))
    return pts


def _member_eps(spec: FamilySpec) -> float:
    if spec.member_eps is None or not 0.0 < spec.member_eps < 1.0:
        raise ValueError("this designated member needs member_eps in (0, 1)")
    return spec.member_eps


def random_discrete_measure(rng: np.random.Generator, max_atoms: int, dim: int, scale: float = 1.0) -> DiscreteMeasure:
    """Random probability measure for tests and demos: n <= max_atoms atoms."""
    n = int(rng.integers(2, max_atoms + 1))
    pts = rng.standard_normal((n, dim)) * scale
    w = rng.random(n) + 0.05
    w /= w.sum()
    return DiscreteMeasure(pts, w)
