"""Tour of the divergence toolbox: closed forms, bounds, and skew behavior.

Run:  python demos/divergence_basics.py
"""

import numpy as np

from jsbnn import (
    DiagonalGaussian,
    alpha_threshold,
    jsa_bound,
    jsa_mc,
    jsg_gaussian_closed,
    jsg_mc,
    kl_gaussian,
    quadrature_jsa,
    variance_condition_holds,
)

q = DiagonalGaussian([5.0], [1.0])
p = DiagonalGaussian([0.0], [1.0])

print("Two unit-variance Gaussians five means apart:")
print(f"  KL(q||p)              = {kl_gaussian(q, p):.6f}")
print(f"  KL(p||q)              = {kl_gaussian(p, q):.6f}")
print(f"  JS-G closed, a=0.5    = {jsg_gaussian_closed(q, p, 0.5):.6f}")
print(f"  JS-G MC (600 draws)   = {jsg_mc(q, p, 0.5, 600, seed=7):.6f}")
print(f"  JS-A MC (1e5 draws)   = {jsa_mc(q, p, 0.5, 100_000, seed=7):.6f}")
print(f"  JS-A quadrature       = {quadrature_jsa(5, 1, 0, 1, 0.5):.6f}")
print(f"  JS-A bound at a=0.5   = {jsa_bound(0.5):.6f}  (log 2; never exceeded)")

print("\nSkew behavior of the closed form:")
for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"  a={alpha:4.2f}: JS-G(q||p) = {jsg_gaussian_closed(q, p, alpha):9.4f}"
          f"   JS-G(p||q)|1-a = {jsg_gaussian_closed(p, q, 1 - alpha):9.4f}  (duality)")
print("  a=0 recovers KL(q||p); a=1 recovers KL(p||q).")

print("\nWhen does the JS-G constraint term dominate the KL term (lam=1)?")
narrow_q = DiagonalGaussian([0.0], [0.1])   # variance 0.01
wide_p = DiagonalGaussian([0.0], [np.sqrt(0.1)])
thr = alpha_threshold(narrow_q, wide_p)
print(f"  posterior var 0.01 vs prior var 0.1: threshold = {thr:.6f} < 1 "
      f"(admissible; prior variance dominates: {variance_condition_holds(narrow_q, wide_p)})")
thr_swapped = alpha_threshold(wide_p, narrow_q)
print(f"  swapped pair: threshold = {thr_swapped:.6f} > 1 "
      f"(no admissible skew: {variance_condition_holds(wide_p, narrow_q)})")
