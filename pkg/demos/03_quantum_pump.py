# Quantized pump
#
# Replacing the classical pump by a mode b in Fock state |N> makes the model
# exactly finite: the state stays in the chain |0,N>, |n,N-1>, ..., |nN,0>.
# The effective classical squeezing parameter is r = r_tilde * sqrt(N).

import numpy as np

from squeezelab import QuantumPumpModel, conserved_charge_trace, run_quantum_pump
from squeezelab.analysis import parity_scan, pump_family

res = run_quantum_pump(QuantumPumpModel(3, 20))
print("pump N=20: peak <n_a> =", res["n_a"].max().round(3), "max depletion =", res["depletion"].max().round(3))

# n_a + n n_b is conserved, which is what keeps the chain closed.

q = conserved_charge_trace(res)
print("Q range:", q.min(), q.max())

# The parity of N now plays the role the truncation parity played before.

r = np.linspace(0, 3, 301)
rep = parity_scan(pump_family(3, r), [30, 31, 32, 33])
print(f"N in 30..33: adjacent gap {rep.delta_adjacent:.3f}, same parity {rep.delta_same_parity:.4f}, ratio {rep.ratio:.1f}")
