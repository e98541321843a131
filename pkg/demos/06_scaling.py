# Growth of the signal with the pump
#
# With a quantized pump, the signal response over a fixed effective-r window
# grows roughly like sqrt(N). We fit both the peak and the mean of <n_a>.

import numpy as np

from squeezelab.analysis import scaling_study

Ns = [int(2 * round(v / 2)) for v in np.geomspace(50, 800, 8)]
fit = scaling_study(3, Ns, workers=4)["even"]
for N, p, m in zip(fit.N_values, fit.peak, fit.mean):
    print(f"N={N:4d}  peak {p:7.3f}  mean {m:7.3f}")
print("peak exponent", round(fit.peak_fit.exponent, 3), "mean exponent", round(fit.mean_fit.exponent, 3))
