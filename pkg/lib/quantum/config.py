"""
Configuration for the statevector simulator.
"""

# Register size
WIRE_CAP = 14  # Largest single statevector (2**14 amplitudes)

# Numerical tolerances
STATE_TOLERANCE = 1e-10  # Norm, trace and hermiticity checks on states
MATRIX_TOLERANCE = 1e-12  # Raw gate-matrix identities (unitarity, G**k == I)
PSD_TOLERANCE = 1e-9  # Smallest eigenvalue allowed for a density matrix

# Serialization
COMPLEX_DIGITS = 17  # Significant digits when writing [re, im] pairs
