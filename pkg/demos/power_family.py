"""Which inverted power potentials keep the dynamics free of boundary data?

For ``V = -(1 + r)**beta`` on the half line the envelope is
``Q = (1 + r)**beta`` and the generalized distance grows like
``int (1 + r)**(-beta / 2) dr``.  It diverges up to ``beta = 2`` and stays
bounded beyond.  The Weyl classifier gives the independent answer.
"""

import numpy as np

from formlab import (Envelope, build_interval_mesh, distance_from_base, evaluate_criterion,
                     weyl_classify_1d)
from formlab.potential import power_profile

mesh = build_interval_mesh(1000.0, 20_000)
r = distance_from_base(mesh).values

print(f"{'beta':>4}  {'criterion':<24} {'tail p':>7}  {'P(1000)':>9}  weyl")
for beta in range(5):
    rep = evaluate_criterion(mesh, Envelope.from_Q(power_profile(1.0, beta)(r)))
    weyl = weyl_classify_1d(lambda t: -(1 + t) ** beta, T=30.0)
    print(f"{beta:>4}  {rep.verdict.value:<24} {rep.tail_exponent:7.4f}  "
          f"{rep.P.max():9.3f}  {weyl.classification}")

# beta = 2 is the borderline: P grows like log(1 + r), slowly but without bound
rep = evaluate_criterion(mesh, Envelope.from_Q((1 + r) ** 2))
R, Pmin = rep.profile[-1]
print(f"\nborderline case: P_min({R:.0f}) = {Pmin:.4f}, log(1 + R) = {np.log1p(R):.4f}")
print(rep.divergence.diagnostics)
