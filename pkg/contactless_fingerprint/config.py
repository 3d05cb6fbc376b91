"""Central configuration defaults for the contactless fingerprint toolkit.

All default values should be defined here as the single source of truth.
"""

DEFAULT_IMAGE_ROWS = 310
DEFAULT_IMAGE_COLS = 240

DEFAULT_AMT_WINDOW = 15
DEFAULT_AMT_OFFSET = 5
DEFAULT_GLOBAL_THRESHOLD = 128

DEFAULT_BLOCK_SIZE = 16
DEFAULT_COHERENCE_THRESHOLD = 0.3

DEFAULT_BORDER_MARGIN = 10
DEFAULT_MERGE_RADIUS = 5.0
DIRECTION_TRACE_LENGTH = 8

DEFAULT_MAX_PAIR_DISTANCE = 120.0
DEFAULT_DISTANCE_TOLERANCE = 6.0
DEFAULT_DISTANCE_RATIO = 0.10
DEFAULT_ANGLE_TOLERANCE = 11.25

DEFAULT_ARCHITECTURE = "full"
DEFAULT_MARGIN = 1.0
DEFAULT_LEARNING_RATE = 1e-3
DEFAULT_ADAM_BETA1 = 0.9
DEFAULT_ADAM_BETA2 = 0.999
DEFAULT_ADAM_EPSILON = 1e-8
DEFAULT_EPOCHS = 70
DEFAULT_BATCH_SIZE = 16
BATCH_NORM_EPSILON = 1e-5
BATCH_NORM_MOMENTUM = 0.9
SIMILARITY_EPSILON = 1e-6

DEFAULT_W_D = 0.4
DEFAULT_W_M = 0.6
WEIGHT_SUM_TOLERANCE = 1e-9

DEFAULT_IMPOSTOR_SETS = 3
DEFAULT_ENROLLMENT_PHOTOS = 3

DEFAULT_WAVELENGTH = 10.0
DEFAULT_PLANTED_MINUTIAE = 12
DEFAULT_MAX_ROTATION = 10.0
DEFAULT_MAX_TRANSLATION = 15.0
DEFAULT_CONTRAST_JITTER = 0.15
DEFAULT_NOISE_LEVEL = 0.03
DEFAULT_SYNTH_IMPRESSIONS = 8

DEFAULT_SEED = 0
DEFAULT_MAX_WORKERS = 4
DEFAULT_STORAGE_DIR = ".contactless-fingerprint"
DEFAULT_CONFIG_FILENAME = "config.json"
DEFAULT_INDEX_FILENAME = "index.db"
DEFAULT_STORE_DIRNAME = "templates"
DEFAULT_DB_TIMEOUT = 5.0
DEFAULT_LOG_LIST_LIMIT = 100

ENV_HOME = "CFR_HOME"
ENV_CONFIG = "CFR_CONFIG"
ENV_MAX_WORKERS = "CFR_MAX_WORKERS"
