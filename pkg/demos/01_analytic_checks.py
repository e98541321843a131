# Analytic checkpoints
#
# For n = 1 and n = 2 the squeezing operator is well behaved and the mean
# photon number has a closed form. Both make good sanity checks before
# looking at the interesting n >= 3 cases.

import numpy as np

from squeezelab import ClassicalPumpModel, QuantumPumpModel, run_classical, run_quantum_pump

# Displacement: <n>(r) = r^2. A sector of 64 Fock states is plenty for r <= 2.

r = np.linspace(0, 2, 21)
res = run_classical(ClassicalPumpModel(n=1, m=64), r)
print("displacement, max |<n> - r^2| =", np.abs(res["n_a"] - r**2).max())

# Ordinary squeezing: <n>(r) = sinh^2(2r). The photon distribution of a
# squeezed vacuum has a long tail, so the sector has to be much larger.
# The leakage diagnostic tells us whether the truncation is adequate.

r = np.linspace(0, 1, 11)
for m in (100, 200, 400):
    res = run_classical(ClassicalPumpModel(n=2, m=m), r)
    rel = np.abs(res["n_a"][1:] / np.sinh(2 * r[1:]) ** 2 - 1).max()
    print(f"squeezing m={m:4d}: max rel err {rel:.1e}, leakage {res.leakage_trace.max():.1e}")

# With a quantized pump holding a single photon, the n = 3 problem reduces to
# two levels |0,1> and |3,0>, and <n_a> = 3 sin^2(sqrt(6) r).

r_tilde = np.linspace(0, 2.5, 11)
res = run_quantum_pump(QuantumPumpModel(n=3, N=1, r_tilde_grid=tuple(r_tilde)))
print("two-level pump, max err =", np.abs(res["n_a"] - 3 * np.sin(np.sqrt(6) * r_tilde) ** 2).max())
