"""How much does independent rounding cost?

Rounding each job to one configuration independently makes the load on an
atom a sum of Bernoulli variables.  Its alpha-th moment is at most that of a
Poisson variable with the same mean, so the expected energy is within the
generalized Bell number of the LP value.
"""
import numpy as np

from powersched import generalized_bell, poisson_moment
from powersched.probability import binomial_moment_exact

for alpha in (1.11, 1.62, 1.66, 2.0, 2.5, 3.0):
    print(f"alpha={alpha:<5} B={generalized_bell(alpha):.4f}  single non-preemptive factor "
          f"2^(alpha-1)*B={2 ** (alpha - 1) * generalized_bell(alpha):.4f}")

# ten jobs, each on this atom with probability 0.1: the Bernoulli sum is
# dominated by Poisson(1)
probs = np.full(10, 0.1)
for alpha in (2.0, 3.0):
    print(f"E[Bin(10, 0.1)^{alpha:g}] = {binomial_moment_exact(probs, alpha):.4f} "
          f"<= E[Poisson(1)^{alpha:g}] = {poisson_moment(1.0, alpha):.4f}")
