# Coherent pump
#
# A coherent pump is a Poisson superposition of Fock pumps. Different pump
# numbers never interfere in <n_a>, so the result is a weighted average of
# pump runs, and even and odd N enter with almost equal weight.

from squeezelab import CoherentPumpEnsemble, run_coherent_ensemble

res = run_coherent_ensemble(CoherentPumpEnsemble(n=3, mean_photons=9.0, epsilon=1e-8), workers=4)
md = res.metadata
print("window", md["window"], "retained mass", md["retained_mass"])
print("even weight", round(md["even_weight"], 4), "odd weight", round(md["odd_weight"], 4))

r_eff = md["r_effective"]
for i in range(0, r_eff.size, 50):
    print(f"r={r_eff[i]:4.2f}  <n_a>={res['n_a'][i]:7.4f}  even part={res['n_a_even'][i]:7.4f}  odd part={res['n_a_odd'][i]:7.4f}")
