"""Short tour of the library: an exact map, its matrix check and its energies."""

import numpy as np

from dysonmaps import DysonCase, ExactMap, build_fock_rep_2mode, from_name
from dysonmaps.observables import energy_expectation
from dysonmaps.perturbation_engine import closed_form_match, hermitian_chain, integrate_chain
from dysonmaps.coefficient_functions import TimeGrid
from dysonmaps.verification import BlockEngine, tdqh_residual

lam, a = from_name("sin2t"), from_name("cost")

# exact map with c = p lambda
case = DysonCase("eta3", "c=plam", p=-0.5, k1=2.5, k2=1.0)
emap = ExactMap(case, a, lam)
t = np.linspace(0.2, 3.0, 8)
print("gammas at t =", t[:3], "\n", emap.gammas(t)[:, :3])

# h = eta H eta^-1 + i eta_dot eta^-1 on a truncated Fock space
rep = build_fock_rep_2mode(16, 4)
report = tdqh_residual(emap, rep, t, engine=BlockEngine(rep))
print(f"hermiticity {report.max('herm'):.1e}, prediction {report.max('pred'):.1e}, "
      f"quasi-hermiticity {report.max('tdqh'):.1e}")

# instantaneous energy of the (1, 0) state stays real
curve = energy_expectation(emap, 1, 0, 1.0, 1.0, np.linspace(0, 3 * np.pi, 200))
print(f"E(t) in [{curve.E.real.min():.3f}, {curve.E.real.max():.3f}], max |Im E| {curve.max_imag:.1e}")

# perturbative chain against its closed form
c = lam.scaled(0.3)
series = integrate_chain(hermitian_chain(c, lam, 5), TimeGrid(0.0, 3.0, 3000))
print(f"order-5 chain mismatch at eps=0.1: {closed_form_match(series, 0.1, c).weighted_max:.1e}")
