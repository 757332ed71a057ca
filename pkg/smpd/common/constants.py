""" Physical constants (CODATA, as shipped by scipy). """
from scipy import constants as _codata

# Reduced Planck constant in J s.
HBAR: float = _codata.hbar
# Boltzmann constant in J/K.
K_B: float = _codata.k
# Magnetic flux quantum h/2e in Wb.
PHI_0: float = _codata.physical_constants['mag. flux quantum'][0]

TWO_PI: float = 2.0 * _codata.pi
