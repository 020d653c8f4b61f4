from dotenv import load_dotenv
import os

load_dotenv()

# Tool identity (embedded in every report)
TOOL_NAME = "hypercontract"
TOOL_VERSION = "1.0.0"
SCHEMA_VERSION = 1

# Logging
LOG_LEVEL = os.getenv("HC_LOG_LEVEL", "INFO")

# Admissibility tolerances
MARGIN_TOL = float(os.getenv("HC_MARGIN_TOL", 1e-9))
LENS_TOL = 1e-12
DISK_TOL = 1e-12
# cells this close to an oracle boundary are not compared
ORACLE_TOL = 1e-6
COEF_PRUNE = 1e-300

# Default log-spaced t-grid for inf/sup over (0, inf)
T_MIN = float(os.getenv("HC_TMIN", 1e-6))
T_MAX = float(os.getenv("HC_TMAX", 1e6))
T_POINTS = int(os.getenv("HC_TPOINTS", 2000))

# Convexity hypotheses on F
CONVEXITY_T_MIN = 1e-3
CONVEXITY_T_MAX = 1e3
CONVEXITY_T_POINTS = 200
CONVEXITY_TOL = 1e-8
DEGENERATE_TOL = 1e-10

# Quadrature and flow settings
QUAD_ORDER = int(os.getenv("HC_QUAD_ORDER", 64))
FLOW_ORDER_2D = int(os.getenv("HC_FLOW_ORDER_2D", 20))
FLOW_S_POINTS = int(os.getenv("HC_FLOW_S_POINTS", 21))
FLOW_REL_TOL = float(os.getenv("HC_FLOW_REL_TOL", 1e-6))
GLOBAL_TOL = float(os.getenv("HC_GLOBAL_TOL", 1e-6))
SINGULAR_PROBE_T = 1e-12
SINGULAR_PROBE_LIMIT = 1e6

# Scalar function numerics
INVERT_REL_TOL = 1e-12
INVERT_MAX_DOUBLINGS = 200
FD_STEP = 1e-5
FD4_STEP = 1e-4
RATIO_STEP = 1e-3
FD_AGREEMENT_TOL = 1e-5
INTEGRAL_ABS_TOL = 1e-12
INTEGRAL_REL_TOL = 1e-13
# log-width of the finite panel of integrals over (-inf, log t]
INTEGRAL_PANEL_WIDTH = 40.0

# Hamming cube
MAX_CUBE_DIM = 12
DISCRETE_TOL = 1e-10

# Reproducibility and parallelism
DEFAULT_SEED = int(os.getenv("HC_SEED", 42))
MC_CHUNK = 65536
WORKERS = int(os.getenv("HC_WORKERS", 1))
