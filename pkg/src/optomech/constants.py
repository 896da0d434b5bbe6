"""Physical constants (SI) and the shared numerical tolerance table.

All tolerances used by more than one module live here so that bounds are
pinned in a single place rather than scattered through the code.
"""

# CODATA 2018 exact/defined values
HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J/K
C_LIGHT = 299792458.0  # m/s

# Fock-space truncation
DEFAULT_N_TRUNC = 16
TRUNCATION_LEAKAGE_MAX = 1e-10  # evolution aborts above this leakage
NORM_DRIFT_TOL = 1e-10  # acceptable |1 - <psi|psi>| after evolution

# Agreement floors for analytic-vs-numeric cross checks
FIDELITY_FLOOR = 1e-8  # analytic/oracle infidelity budget
UNITARITY_TOL = 1e-12  # beam-splitter weight-norm preservation
STATE_NORM_TOL = 1e-10  # normalized JointState weight-norm window
