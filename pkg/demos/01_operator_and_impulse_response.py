"""From operator coefficients to the companion system and its impulse response."""
import numpy as np

from dissreg import GreensFunction, OperatorSpec, companion_system, green_eval, reduced_coefficients, system_from_roots

# first order operator P = 0.999 + D with dissipation e^{t}
spec = OperatorSpec(1, (0.999, 1.0), theta=1.0, mu=0, lam=-3.0)
beta = reduced_coefficients(spec)
sys1 = companion_system(beta)
print("beta:", beta)
print("A:\n", sys1.A)
print("roots:", np.sort(sys1.roots.real))  # one slow mode (long memory) and one fast mode

# a second order system chosen directly by its roots
sys2 = system_from_roots([-1e-8, -0.6, -0.65, -0.74999999], 2)
print("\nquartic coefficients:", sys2.beta)
print("B:", sys2.B)

# impulse response: zero before the impulse, smooth start, decay set by the slow root
g = GreensFunction(sys1.roots)
for t in (-1.0, 0.0, 0.5, 2.0, 10.0, 1000.0):
    print(f"g({t:7.1f}) = {green_eval(g, t): .6f}")
