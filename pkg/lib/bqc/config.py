"""
Configuration for the blind-computation protocols and the lab CLI.
"""

import os

# Acceptance thresholds
FIDELITY_THRESHOLD = 1e-9  # Delegated / blind output must reach fidelity >= 1 - this
BLINDNESS_THRESHOLD = 1e-10  # Max trace distance from I/d for a blind transmission

# Blindness analysis
ENUMERATION_LIMIT = 2 ** 20  # Secret spaces up to this size are enumerated exactly
DEFAULT_SAMPLE_COUNT = 4096  # Samples drawn when a secret space is too big to enumerate
SAMPLE_BATCHES = 16  # Batches used for the standard error of a sampled view

# Monte Carlo experiments
SIGMA_MULTIPLIER = 3  # Width of the binomial confidence interval
DEFAULT_TRIALS = 1000

# Handshake
HANDSHAKE_WIRE_CAP = 64  # Client + ancilla wires of one product register
BASIS_RULES = ("uniform", "announced")  # How the server picks a decoy measurement basis
DEFAULT_BASIS_RULE = "uniform"

# Randomness: named per-party streams derived from one seed
CLIENT_STREAM = "client"
SERVER_STREAM = "server"
ADVERSARY_STREAM = "adversary"
TRIAL_STREAM = "trial"

# Output
OUTPUT_DIR = os.path.join("data", "output", "lab")
LOG_DIR = os.path.join(OUTPUT_DIR, "logs")
LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"

# CLI exit codes
EXIT_OK = 0
EXIT_FAILURE = 1  # Quantitative check failed (fidelity, trace distance)
EXIT_USAGE = 2  # Parse / validation error
EXIT_ABORT = 3  # Protocol aborted at the decoy check
