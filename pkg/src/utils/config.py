import os
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", ".."))

# Only artefact locations and verbosity come from the environment.
LOG_DIR = os.getenv("LAB_LOG_DIR", os.path.join(BASE_DIR, "logs"))
LOG_LEVEL = os.getenv("LAB_LOG_LEVEL", "INFO").upper()
REPORT_DIR = os.getenv("LAB_REPORT_DIR", os.path.join(BASE_DIR, "reports"))

os.makedirs(LOG_DIR, exist_ok=True)

# Dense storage limits
DIM_CAP = 2 ** 14
COMPILE_DIM_CAP = 2 ** 10
VERIFY_DIM_CAP = 2 ** 10

# Sweep rows evaluate per-cut bounds on at most this many cuts
SWEEP_MAX_CUTS = 2 ** 20

# Numerical tolerances
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORMALIZATION_TOL = 1e-10
EIGEN_CLAMP = 1e-14
UNITARY_TOL = 1e-9
DURATION_TOL = 1e-9

# Circuit simulation
DEFAULT_SUBSTEPS = 64
ENTROPY_DRIFT_TOL = 1e-8

# Bound constants
SIE_CONSTANT = 22.0

# Verification harness
VERIFY_SLACK = 1e-7
SIE_SLACK = 1e-6
SIE_STEP = 1e-5
