"""Independent oracle for the resonant cosine walk.

At resonance the free evolution is the identity, so m kicks of strength phi
merge into one kick of strength m*phi, and the momentum amplitudes of the
walker started at n=0 follow the plane-wave expansion of exp(-i*K*cos(theta)):
c_n = (-i)^n J_n(K).  Only scipy/numpy are used here; run this script to
regenerate the frozen literals quoted in the tests.
"""

import numpy as np
from scipy.special import jv

K = 40.0  # 20 kicks at phi = 2
n = np.arange(-8, 9)
print("K =", K)
for k in n:
    print(f"J_{k:+d}({K:g})^2 = {jv(k, K) ** 2!r}")
print("sum over |n| <= 128:", np.sum(jv(np.arange(-128, 129), K) ** 2))
print("phase law c_n = (-i)^n J_n(K), e.g. c_3 =", (-1j) ** 3 * jv(3, K))
