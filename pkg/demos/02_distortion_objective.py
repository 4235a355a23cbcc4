"""The quadratic distortion objective on partial couplings.

Evaluates the distortion of a coupling, checks the analytic gradient against
finite differences, and shows the exact line search along a feasible segment.

Run from the repository root:  python3 demos/02_distortion_objective.py
"""

import numpy as np

from rgw import DiscreteMeasure, MMSpace, PartialCoupling, distortion, gradient, line_search
from rgw.objective import _decomp_quad

rng = np.random.default_rng(1)

# Two small spaces and the product coupling between them.
mu = DiscreteMeasure(rng.standard_normal((3, 2)), [0.5, 0.3, 0.2])
nu = DiscreteMeasure(rng.standard_normal((4, 2)), [0.4, 0.3, 0.2, 0.1])
x, y = MMSpace.from_points(mu), MMSpace.from_points(nu)
pi = PartialCoupling(np.outer(x.weights, y.weights), x, y, trim=0.0)
print("distortion of the product coupling:", distortion(pi, pi))

# The closed form against a point mass: couple the two-atom measure with a
# point and the value is sqrt(2 e (1-e)) * a^2.
e, a = 0.25, 1.0
two = MMSpace.from_points(DiscreteMeasure([[0.0], [a]], [1 - e, e]))
pt = MMSpace.from_points(DiscreteMeasure([[0.0]], [1.0]))
forced = PartialCoupling(np.array([[1 - e], [e]]), two, pt, 0.0)
print("two-atom vs point:", distortion(forced, forced), "= sqrt(2*0.25*0.75) =", np.sqrt(0.375))

# Gradient of the squared objective versus central finite differences.
g = gradient(pi)
h = 1e-6
i, j = 1, 2
up, dn = pi.mass.copy(), pi.mass.copy()
up[i, j] += h
dn[i, j] -= h
fd = (_decomp_quad(x.cost, y.cost, up, up) - _decomp_quad(x.cost, y.cost, dn, dn)) / (2 * h)
print(f"gradient[{i},{j}] analytic {g[i, j]:.8f} vs finite difference {fd:.8f}")

# The objective restricted to a segment between two couplings is an exact
# quadratic, so the optimal step has a closed form.
other_mass = np.zeros((3, 4))
order = rng.permutation(12)
p, q = x.weights.copy(), y.weights.copy()
rem = 1.0
for flat in order:
    r, c = divmod(int(flat), 4)
    t = min(p[r], q[c], rem)
    other_mass[r, c] = t
    p[r] -= t
    q[c] -= t
    rem -= t
other = PartialCoupling(other_mass, x, y, 0.0)
t_star, value = line_search(pi, other)
print(f"exact step t* = {t_star:.6f} drops the squared objective to {value:.8f}")
print("endpoints were:", distortion(pi, pi) ** 2, distortion(other, other) ** 2)
