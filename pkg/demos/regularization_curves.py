"""How the JS-G penalty grows faster than KL as the posterior mean drifts.

With a narrow posterior q = N(mu, 0.01) and a wide prior p = N(0, 0.1), both
divergences are quadratic in mu, but the JS-G coefficient is more than twice
the KL one, so a drifting weight pays a steeper price. This is the mechanism
behind the stronger regularization of the JS-G loss.

Run:  python demos/regularization_curves.py
"""

import numpy as np

from jsbnn import DiagonalGaussian, fit_quadratic_coefficient, jsg_gaussian_closed, kl_gaussian

prior = DiagonalGaussian([0.0], [np.sqrt(0.1)])
mus = np.linspace(-1.0, 1.0, 41)

kl_vals = np.array([kl_gaussian(DiagonalGaussian([m], [0.1]), prior) for m in mus])
jsg_vals = np.array([jsg_gaussian_closed(DiagonalGaussian([m], [0.1]), prior, 0.5) for m in mus])

print("  mu      KL         JS-G (a=0.5)")
for m, k, j in zip(mus[::5], kl_vals[::5], jsg_vals[::5]):
    print(f" {m:5.2f}  {k:9.4f}  {j:9.4f}")

c_kl = fit_quadratic_coefficient(mus, kl_vals)
c_jsg = fit_quadratic_coefficient(mus, jsg_vals)
print(f"\nFitted mu^2 coefficients: KL {c_kl:.4f} vs JS-G {c_jsg:.4f} "
      f"({c_jsg / c_kl:.2f}x steeper)")

outer = np.abs(mus) >= 0.2
print(f"JS-G >= KL at every grid point with |mu| >= 0.2: {bool(np.all(jsg_vals[outer] >= kl_vals[outer]))}")
print("\nThe same table is produced as a CSV (plus a Monte-Carlo JS-A column) by:")
print("  jsbnn divergence-curve --q-sigma-sq 0.01 --p-sigma-sq 0.1 --alpha 0.5")
