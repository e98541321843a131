# Choosing a propagator
#
# Three propagators share one interface. The spectral method diagonalizes
# the tridiagonal generator once. The Krylov method needs only products with
# the generator. The reference integrator is slow and exists for checking.

import time

import numpy as np

from squeezelab import PropagatorConfig, build_classical_generator, build_sector_basis, evolve, vacuum

gen = build_classical_generator(build_sector_basis(3, 0, 256))
r = np.linspace(0, 2, 21)
out = {}
for method in ("spectral", "krylov", "reference"):
    t0 = time.perf_counter()
    out[method] = evolve(gen, vacuum(gen.dim), r, PropagatorConfig(method), keep_states=True)
    print(f"{method:9s} {time.perf_counter() - t0:6.2f} s  norm drift {out[method].norm_drift:.1e}")

print("spectral vs krylov:", np.abs(out["spectral"].states - out["krylov"].states).max())
print("spectral vs reference:", np.abs(out["spectral"].states - out["reference"].states).max())
