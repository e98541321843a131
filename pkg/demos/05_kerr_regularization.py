# Kerr regularization
#
# Adding chi (a^dag a)^2 makes the Hamiltonian well behaved at large photon
# numbers. The traces then become independent of the truncation size, for
# both parities.

from squeezelab.analysis import kerr_convergence

sizes = [100, 101, 120, 121, 140, 141, 160, 161]
for chi in (0.0, 0.05, 0.2):
    rep = kerr_convergence(3, chi, sizes, allow_zero=True, workers=4)
    gaps = ", ".join(f"{g:.1e}" for _, _, g in rep.pair_gaps)
    print(f"chi={chi:4.2f}  adjacent gaps: {gaps}")
