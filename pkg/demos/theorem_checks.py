"""Randomized verification of the library's structural guarantees.

Each suite samples random Gaussian pairs and checks a property that must hold
for every one of them: the skewed-mixture divergence stays under its analytic
bound (measured by an independent quadrature oracle), the dominance threshold
is consistent with the dominance predicate, the threshold is admissible
exactly when the prior variance exceeds the posterior variance, and the
closed form obeys skew duality and endpoint KL recovery.

Run:  python demos/theorem_checks.py
"""

from jsbnn.cli import run_theorem_suites

results = run_theorem_suites(trials=200, seed=0)
for name, passed, detail in results:
    print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

print("\nSelf-test: the same suites with every condition negated must all fail.")
negated = run_theorem_suites(trials=5, seed=0, inject_bug=True)
print("negated suites failing as expected:", all(not ok for _, ok, _ in negated))
print("\nThe CLI equivalent:  jsbnn verify-theorems --trials 1000  (exit 4 on violation)")
