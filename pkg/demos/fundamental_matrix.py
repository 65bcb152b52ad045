"""
Fundamental matrices and the initial-condition trick
====================================================

For z' = A(t) z the fundamental matrix Phi maps z(0) to z(t).  The
observers use it to turn "find the state" into "find z(0)".
"""

import numpy as np

from descobs.numerics import integrate_fixed_step, propagate_fundamental

rng = np.random.default_rng(1)
A0, A1 = rng.normal(size=(2, 3, 3))


def A(t):
    return A0 + A1 * np.sin(2 * t)


Phi = propagate_fundamental(A, 0.0, 5.0, 1e-3)
z0 = rng.normal(size=3)
z = integrate_fixed_step(lambda t, x: A(t) @ x, 0.0, z0, 5.0, 1e-3)
print("max |z(t) - Phi(t) z0|:", np.max(np.abs(z.states - Phi.states @ z0)))

# scalar check against the closed form exp(sin t)
Phi1 = propagate_fundamental(lambda t: np.array([[np.cos(t)]]), 0.0, 3.0, 1e-3)
print("scalar case error:", np.max(np.abs(Phi1.states[:, 0, 0] - np.exp(np.sin(Phi1.times)))))

# once z(t) = Phi(t) z0, any measurement y = c z is linear in z0
c = np.array([1.0, 0.0, 0.0])
psi = Phi.states.transpose(0, 2, 1) @ c
y = z.states @ c
z0_hat = np.linalg.lstsq(psi, y, rcond=None)[0]
print("z0 recovered from y alone:", z0_hat, "true:", z0)
