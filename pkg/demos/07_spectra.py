# Spectra of truncations
#
# A truncated generator is a real antisymmetric matrix times i, so its
# spectrum is symmetric about zero and odd sizes always carry a zero mode.
# Within one parity class the low-lying eigenvalues settle down as the size
# grows, but the even and odd classes settle on different values.

import numpy as np

from squeezelab import build_classical_generator, build_sector_basis, spectrum
from squeezelab.analysis import extension_convergence, nearest_distance

odd = spectrum(build_classical_generator(build_sector_basis(3, 0, 201)))
print("m=201: zero mode", odd.has_zero_mode, "pairing defect", odd.pairing_defect)

even = extension_convergence(3, [100, 200, 400, 800], J=8)
oddt = extension_convergence(3, [101, 201, 401, 801], J=8)
print("even limit:", np.round(even.limit, 4))
print("odd limit: ", np.round(oddt.limit, 4))
print("last change within even class:", np.round(even.gaps[-1], 5))
print("distance from odd to even levels:", np.round(nearest_distance(oddt.limit, even.limit), 4))
