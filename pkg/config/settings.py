"""
Configuration settings for the stochastic contraction lab.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Output settings (LAB_OUTPUT_DIR is the only variable allowed to override experiment configs)
OUTPUT_DIR = os.getenv('LAB_OUTPUT_DIR')
DEFAULT_OUTPUT_DIR = os.getenv('DEFAULT_OUTPUT_DIR', 'output')

# Logging settings
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO').upper()
LOG_FILE = os.getenv('LOG_FILE')  # e.g. lab.log; stdout only when unset

# Parallelism
WORKERS = int(os.getenv('WORKERS', os.cpu_count() or 1))
SUITE_WORKERS = int(os.getenv('SUITE_WORKERS', 2))
NOISE_BLOCK = 1024  # particles per noise substream, fixed so results never depend on WORKERS

# Run ledger
RUN_LEDGER_ENABLED = os.getenv('RUN_LEDGER_ENABLED', 'True').lower() == 'true'
RUN_LEDGER_FILENAME = os.getenv('RUN_LEDGER_FILENAME', 'runs.sqlite')

# Field settings
HESSIAN_FD_STEP = 1e-5

# Contraction analysis settings
ROOT_TOL = float(os.getenv('ROOT_TOL', 1e-10))
NEWTON_FD_STEP = 1e-6
NEWTON_MAX_ITER = int(os.getenv('NEWTON_MAX_ITER', 100))
DEDUP_RADIUS = 1e-6
PERTURBATION_SCALES = (1e-3, 1e-2, 1e-1)
MIN_PAIRS = 100

# Measure settings
CONVERGENCE_THRESHOLD = float(os.getenv('CONVERGENCE_THRESHOLD', 1e-6))
EXACT_W2_MAX_POINTS = 1024
SINKHORN_MAX_ITER = int(os.getenv('SINKHORN_MAX_ITER', 20000))
SINKHORN_TOL = float(os.getenv('SINKHORN_TOL', 1e-6))
SINKHORN_REG_FACTOR = 0.01  # times the median pairwise cost
SLICED_PROJECTIONS = int(os.getenv('SLICED_PROJECTIONS', 200))
KDE_ESCAPE_SIGMAS = 5.0

# Fokker-Planck settings
FPE_SAFETY = float(os.getenv('FPE_SAFETY', 0.5))
FPE_NEGATIVE_TOL = 1e-12
FPE_COVERAGE_SIGMAS = 3.0
FPE_MONITOR_INTERVAL = float(os.getenv('FPE_MONITOR_INTERVAL', 0.5))  # time units between monitor snapshots
FPE_MAX_STEPS = int(os.getenv('FPE_MAX_STEPS', 200000))

# Hopfield settings
HOPFIELD_CONNECTIVITY_SCALE = 0.5
GAMMA_MAX_ITER = 10000
THM2_III_THRESHOLD = 0.1
THM2_SUPPORT_FRACTION = 1e-3

# Harness settings
BALL_MASS_TOL = 0.02
MONOTONE_TOL = 0.005
STAT_MARGIN_SE = 3.0
BOOTSTRAP_RESAMPLES = 10
CHI2_INFLATION = 0.10
PLATEAU_FACTOR = 3.0
MIN_FIT_SAMPLES = 5
