"""Regenerate the bundled generic 4-dimensional scenario from a pinned seed.

    python3 tools/make_generic_scenario.py > src/dwarp/harness/scenarios/generic_4d_doubly_warped.dwp
"""
import sys

import numpy as np

SEED = 2024


def coeffs(rng, n, scale):
    return [round(float(x), 2) for x in rng.uniform(-scale, scale, size=n)]


def t(c, mono):
    """Signed term ``+ c*mono`` with a tidy sign and two decimals."""
    c = round(c, 2)
    return f"{'-' if c < 0 else '+'} {abs(c):g}*{mono}"


def main(seed: int = SEED) -> str:
    rng = np.random.default_rng(seed)
    a = coeffs(rng, 3, 0.3)   # first factor metric perturbation
    b = coeffs(rng, 3, 0.3)   # second factor metric perturbation
    w1 = coeffs(rng, 2, 0.4)  # warp on the first factor
    w2 = coeffs(rng, 2, 0.3)  # warp on the second factor
    c1 = coeffs(rng, 4, 0.5)  # curve in the first factor
    c2 = coeffs(rng, 4, 0.5)  # curve in the second factor
    return f"""# Generic doubly warped ambient of dimension 4 with curves in both factors.
# Coefficients drawn with numpy default_rng({seed}); see tools/make_generic_scenario.py.
[manifold A1]
coords = x, y
g x x = "1 {t(abs(a[0]), 'x^2')}"
g x y = "{a[1]:g}*x"
g y y = "1 {t(abs(a[2]), 'y^2')}"
bound x = (-1, 1.5)
bound y = (-1, 1.5)

[manifold A2]
coords = u, v
g u u = "2 {t(b[0], 'sin(v)')}"
g u v = "0"
g v v = "1 {t(abs(b[1]), 'u^2')} {t(abs(b[2]), 'v^2')}"
bound u = (-1, 1.5)
bound v = (-1, 1.5)

[warp ambient]
factors = A1, A2
f1 = "2 {t(w1[0], 'x')} {t(abs(w1[1]), 'y^2')}"
f2 = "1.5 {t(w2[0], 'u*v')} {t(w2[1], 'v')}"

[manifold Ns]
coords = s
induced = curve1
bound s = (0, 1)

[manifold Nq]
coords = q
induced = curve2
bound q = (0, 1)

[immersion curve1]
source = Ns
target = A1
map x = "0.2 {t(0.6 + abs(c1[0]), 's')} {t(c1[1], 's^2')}"
map y = "0.1 {t(c1[2], 's')} {t(0.5 + abs(c1[3]), 's^2')}"

[immersion curve2]
source = Nq
target = A2
map u = "0.2 {t(0.3 + abs(c2[0]), 'q')} {t(c2[1], 'q^2')}"
map v = "0.1 {t(0.6 + abs(c2[2]), 'q')} {t(c2[3], 'q^3')}"

[scenario generic_4d]
phi1 = curve1
phi2 = curve2
ambient = ambient
seed = 9

[checks]
isometry
warp_positivity
u_field
connection_closed_form
curvature_closed_form
wedge
mixed_sectional
gauss_equation
second_fundamental_form
weingarten
mean_curvature
classification
partial_mean_curvature
mixed_totally_geodesic
h_decomposition
norm_identity
ni_totally_geodesic
umbilical
minimality
shape_operator_closed_form
max_sectional
inequality_201
obstruction
"""


if __name__ == "__main__":
    sys.stdout.write(main(int(sys.argv[1]) if len(sys.argv) > 1 else SEED))
