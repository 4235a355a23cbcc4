"""Quadratic distortion functional on (partial) couplings.

The squared objective on a coupling pi is the quartic form

    F(pi) = sum_{i,j,k,l} (Cx[i,k] - Cy[j,l])^2 pi[i,j] pi[k,l],

evaluated through the decomposition  u'Au + v'Bv - 2<Cx pi Cy, pi>  with
A = Cx*Cx, B = Cy*Cy elementwise and (u, v) the coupling marginals.  The
decomposition is fast but cancels catastrophically near F = 0, so reported
values use the sign-free quadruple sum whenever the instance is small enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import MMSpace

__all__ = [
    "PartialCoupling",
    "ObjectiveReport",
    "distortion",
    "gradient",
    "line_search",
    "gw_to_point",
    "pgw_to_point",
    "gw_to_point_from_samples",
]

FEAS_ATOL = 1e-9

# largest m * n^2 for which the stable quadruple-sum evaluation is attempted
_STABLE_BUDGET = 50_000_000


@dataclass(frozen=True)
class PartialCoupling:
    """Nonnegative m x n mass matrix with sub-marginals and total mass 1 - trim."""

    mass: np.ndarray
    row_space: MMSpace
    col_space: MMSpace
    trim: float

    def __post_init__(self):
        mass = np.array(self.mass, dtype=np.float64, order="C")
        if mass.shape != (self.row_space.size, self.col_space.size):
            raise ValueError("coupling shape does not match the two spaces")
        if not 0.0 <= self.trim <= 1.0:
            raise ValueError("trim must lie in [0, 1]")
        if mass.size and mass.min() < -FEAS_ATOL:
            raise ValueError("coupling has negative entries")
        np.clip(mass, 0.0, None, out=mass)
        p, q = self.row_space.weights, self.col_space.weights
        if np.any(mass.sum(axis=1) > p + FEAS_ATOL):
            raise ValueError("row marginal exceeds the first measure")
        if np.any(mass.sum(axis=0) > q + FEAS_ATOL):
            raise ValueError("column marginal exceeds the second measure")
        total = float(mass.sum())
        if abs(total - (1.0 - self.trim)) > FEAS_ATOL:
            raise ValueError(
                f"total mass {total:.12g} differs from 1 - trim = {1.0 - self.trim:.12g}"
            )
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @property
    def row_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=1)

    @property
    def col_marginal(self) -> np.ndarray:
        return self.mass.sum(axis=0)


@dataclass(frozen=True)
class ObjectiveReport:
    """Objective value (the distortion, not its square) with gradient and marginals."""

    value: float
    gradient: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray


def _decomp_quad(cx, cy, pi_a, pi_b) -> float:
    """Bilinear form sum (Cx-Cy)^2 pi_a pi_b via the marginal decomposition."""
    ua, va = pi_a.sum(axis=1), pi_a.sum(axis=0)
    ub, vb = pi_b.sum(axis=1), pi_b.sum(axis=0)
    a_term = ua @ (cx * cx) @ ub
    b_term = va @ (cy * cy) @ vb
    cross = np.sum((cx @ pi_a @ cy) * pi_b)
    return float(a_term + b_term - 2.0 * cross)


def _stable_quad(cx, cy, pi_a, pi_b) -> float:
    """Sign-free evaluation of the same bilinear form; O(m^2 n^2) time."""
    m = cx.shape[0]
    total = 0.0
    for i in range(m):
        diff = cx[i][:, None, None] - cy[None, :, :]  # (m, n, n)
        total += float(np.einsum("kjl,j,kl->", diff * diff, pi_a[i], pi_b))
    return total


def _objective_value(cx, cy, pi, stable: bool = True) -> float:
    if stable and pi.shape[0] * pi.shape[1] ** 2 <= _STABLE_BUDGET:
        return max(_stable_quad(cx, cy, pi, pi), 0.0)
    return max(_decomp_quad(cx, cy, pi, pi), 0.0)


def _gradient_raw(cx, cy, pi) -> np.ndarray:
    u, v = pi.sum(axis=1), pi.sum(axis=0)
    return 2.0 * (((cx * cx) @ u)[:, None] + ((cy * cy) @ v)[None, :] - 2.0 * (cx @ pi @ cy))


def _check_same_problem(pi1: PartialCoupling, pi2: PartialCoupling):
    same_spaces = (
        pi1.row_space is pi2.row_space or np.array_equal(pi1.row_space.cost, pi2.row_space.cost)
    ) and (
        pi1.col_space is pi2.col_space or np.array_equal(pi1.col_space.cost, pi2.col_space.cost)
    )
    if not same_spaces:
        raise ValueError("couplings live on different pairs of spaces")


def distortion(pi1: PartialCoupling, pi2: PartialCoupling) -> float:
    """Bilinear distortion (sum (Cx-Cy)^2 pi1 pi2)^(1/2) between two couplings.

    Evaluation happens in a canonical orientation (smaller space as rows, byte
    order of the cost matrices as tie-break), so transposing the instance
    returns the bitwise-identical value.
    """
    _check_same_problem(pi1, pi2)
    cx, cy = pi1.row_space.cost, pi1.col_space.cost
    ma, mb = pi1.mass, pi2.mass
    m, n = ma.shape
    if m > n or (m == n and cy.tobytes() < cx.tobytes()):
        cx, cy, ma, mb = cy, cx, ma.T, mb.T
    if ma.shape[0] * ma.shape[1] ** 2 <= _STABLE_BUDGET:
        val = _stable_quad(cx, cy, ma, mb)
    else:
        val = _decomp_quad(cx, cy, ma, mb)
    return float(np.sqrt(max(val, 0.0)))


def gradient(pi: PartialCoupling) -> np.ndarray:
    """Gradient of the squared distortion F at pi, on the ambient matrix space."""
    return _gradient_raw(pi.row_space.cost, pi.col_space.cost, pi.mass)


def objective_report(pi: PartialCoupling) -> ObjectiveReport:
    cx, cy = pi.row_space.cost, pi.col_space.cost
    val = _objective_value(cx, cy, pi.mass)
    return ObjectiveReport(
        value=float(np.sqrt(val)),
        gradient=_gradient_raw(cx, cy, pi.mass),
        row_marginal=pi.row_marginal,
        col_marginal=pi.col_marginal,
    )


def line_search(pi: PartialCoupling, gamma: PartialCoupling):
    """Exact minimizer of F((1-t) pi + t gamma) over t in [0, 1].

    Returns ``(t_star, value)`` where ``value`` is the quadratic model's value
    at ``t_star``; the model is exact because F is quadratic along segments.
    """
    _check_same_problem(pi, gamma)
    if abs(gamma.trim - pi.trim) > FEAS_ATOL:
        raise ValueError("gamma is not feasible for the same trimmed coupling set")
    cx, cy = pi.row_space.cost, pi.col_space.cost
    d = gamma.mass - pi.mass
    a = _decomp_quad(cx, cy, d, d)
    b = float(np.sum(_gradient_raw(cx, cy, pi.mass) * d))
    c = _decomp_quad(cx, cy, pi.mass, pi.mass)
    t, val = _minimize_segment(a, b, c)
    return t, max(val, 0.0)


def _minimize_segment(a: float, b: float, c: float):
    """Minimize a t^2 + b t + c on [0, 1]; ties resolve to the smaller t."""
    if a > 0.0:
        t = min(max(-b / (2.0 * a), 0.0), 1.0)
        return t, a * t * t + b * t + c
    # concave or linear: compare endpoints
    end = a + b + c
    if end < c:
        return 1.0, end
    return 0.0, c


def gw_to_point(mu: MMSpace) -> float:
    """Distortion cost of mu against a one-point space (closed form, exact)."""
    if not mu.measure.is_probability:
        raise ValueError("gw_to_point requires a probability measure")
    p = mu.weights
    val = p @ (mu.cost * mu.cost) @ p
    return float(np.sqrt(max(float(val), 0.0)))


def gw_to_point_from_samples(points, weights=None) -> float:
    """Same closed form directly from a point cloud in O(n d^2) time.

    Avoids materializing the n x n cost matrix; intended for large empirical
    measures.  Uniform weights are assumed when ``weights`` is None.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = x.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=np.float64)
    sq = np.einsum("id,id->i", x, x)
    s1 = float(w @ sq)
    s2 = float(w @ (sq * sq))
    mean = w @ x
    t = (w * sq) @ x
    gram = x.T @ (w[:, None] * x)
    val = 2.0 * s2 + 2.0 * s1 * s1 - 8.0 * float(t @ mean) + 4.0 * float(np.sum(gram * gram))
    return float(np.sqrt(max(val, 0.0)))


def pgw_to_point(mu: MMSpace, eps: float) -> float:
    """Trimmed distortion cost against a one-point space (small supports only).

    Minimizes (m' (C*C) m)^(1/2) over kept-mass vectors 0 <= m <= p with
    sum(m) = 1 - eps.  The quartic form is concave along every feasible
    pairwise transfer direction, so the optimum is attained at a vertex of the
    trimming polytope: at most one atom is partially trimmed.  All such
    vertices are enumerated, which makes the value exact up to rounding.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if not mu.measure.is_probability:
        raise ValueError("pgw_to_point requires a probability measure")
    n = mu.size
    if n > 12:
        raise ValueError(
            "support too large for the enumeration oracle (> 12 atoms); "
            "use solvers.solve_pgw against a one-point space instead"
        )
    if eps == 0.0:
        return gw_to_point(mu)
    p = mu.weights
    a = mu.cost * mu.cost
    best = np.inf
    atol = 1e-12
    for mask in range(1 << n):
        trimmed = [i for i in range(n) if mask >> i & 1]
        cut = float(p[trimmed].sum())
        if cut > eps + atol:
            continue
        rem = eps - cut
        m0 = p.copy()
        m0[trimmed] = 0.0
        if rem <= atol:
            best = min(best, float(m0 @ a @ m0))
            continue
        for j in range(n):
            if mask >> j & 1 or p[j] < rem - atol:
                continue
            m = m0.copy()
            m[j] = p[j] - rem
            best = min(best, float(m @ a @ m))
    return float(np.sqrt(max(best, 0.0)))
