from enum import Enum, auto

class OutputFormat(Enum):
    CSV = auto()
    JSON = auto()

class CheckStatus(Enum):
    PASS = auto()
    FAIL = auto()
    INFO = auto()

# Quadrature
RELATIVE_TOLERANCE = 1e-10
ABSOLUTE_FLOOR = 1e-300
GAUSS_LEGENDRE_ORDER = 20
MAX_PANEL_DEPTH = 40

# Entropy and distributions
ENTROPY_FLOOR = 1e-300
MERGE_TOLERANCE = 1e-12
PROBABILITY_SUM_TOLERANCE = 1e-12
ROW_SUM_TOLERANCE = 1e-9
KKT_TOLERANCE = 1e-8

# Blahut-Arimoto oracle
BA_TOLERANCE = 1e-6
BA_MAX_ITER = 20000
POWER_SLACK = 1e-6
LAMBDA_ITERATIONS = 200
LAMBDA_XTOL = 1e-14
LAMBDA_DOUBLINGS = 60
ORACLE_PHASES = 24
ORACLE_RADII = 8
ORACLE_RADIUS_FACTOR = 1.75

# Rotation search
COARSE_SCAN_POINTS = 64
ROTATION_XTOL = 1e-10

# Rate threshold inversion
THRESHOLD_RTOL = 1e-8
THRESHOLD_XTOL = 1e-14

# Monte Carlo
DEFAULT_SEED = 0x5EED
MC_CHUNK_SIZE = 2 ** 16
RARE_EVENT_COUNT = 10
CONFIDENCE_LEVEL = 0.95

# Rate lookup table
RATE_TABLE_SIZE = (256, 256)
RATE_TABLE_TOLERANCE = 1e-3
RATE_TABLE_MIN_GAIN = 1e-3
RATE_TABLE_MAX_GAIN = 1e6
RATE_TABLE_MIN_OFFSET = 1e-5
RATE_TABLE_VALIDATION_POINTS = 256
RATE_TABLE_MAX_DOUBLINGS = 2

# Figure 1 families
GAUSSIAN_GRID = (32, 32)
CIRCLE_ORDER = 256

# Output
CSV_FLOAT_FORMAT = "%.16e"
GOLDEN_DIR = "stores/golden/v1"
