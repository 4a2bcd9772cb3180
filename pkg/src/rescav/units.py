"""Physical constants and unit conversions (hartree atomic units throughout).

Everything in the package works in atomic units; the only conversions
are the cavity-geometry ones (bohr to micrometer) and the atomic masses,
which enter through the mass-weighting factors and the kinetic prefactor.
"""

# Speed of light in atomic units (1/alpha).
SPEED_OF_LIGHT_AU = 137.035999

# One bohr in micrometers.
BOHR_TO_UM = 5.29177210903e-5

# Electron masses per unified atomic mass unit.
AMU_TO_AU = 1822.888486209

# Isotope masses, u (14N, 16O).
M_N_AMU = 14.003074
M_O_AMU = 15.994915

# Same masses in electron-mass atomic units.
M_N_AU = M_N_AMU * AMU_TO_AU
M_O_AU = M_O_AMU * AMU_TO_AU
