import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Paths
BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = BASE_DIR / "data"
DOCS_DIR = BASE_DIR / "docs"
SCHEMA_DIR = DOCS_DIR / "schemas"
TEMPLATES_DIR = Path(__file__).resolve().parent / "templates"

TOY_CONFIG_TEMPLATE = DATA_DIR / "toy_config.json"
CURATION_THRESHOLDS_FILE = DATA_DIR / "curation_thresholds.json"

# Versions
ARTIFACT_VERSION = "0.3.0"
SCHEMA_VERSION = "1.0"
CHECKPOINT_FORMAT_VERSION = 1

# Ambient settings (never influence numeric results)
LOG_LEVEL = os.getenv("GRIDWAVE_LOG_LEVEL", "INFO").upper()
MAX_WORKERS = max(1, int(os.getenv("GRIDWAVE_WORKERS", "4")))

# Rotary embedding analysis
ROPE_DIM = 56                 # per-axis feature dimension, 28 pairs
THETA_DEFAULT = 10000.0
THETA_RFR = 100.0
PHASE_THRESHOLD_DEG = 5.0
SIMILARITY_ZONE_LEVEL = 0.99
ANALYSIS_GRID = 128           # 4096 px / (16 * 2)
ANALYSIS_SAMPLES = 256

# Periodicity loss
DEFAULT_LAGS = (8, 16, 24, 32, 40)
QUADRANTS = 4
VARIANCE_FLOOR = 1e-12

# Artifact diagnostics
ARTIFACT_PERIOD = 32
SPIKE_THRESHOLD = 10.0
SPATIAL_THRESHOLD = 0.5
ANNULUS_RADIUS = 3
SPECTRUM_FLOOR = 1e-6         # background floor, relative to the spectrum maximum

# Metrics
PSNR_CAP_DB = 100.0
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
MIN_SSIM_EXTENT = 11

# Curation
GLCM_LEVELS = 16
GLCM_OFFSETS = ((0, 1), (1, 0))
ENTROPY_BINS = 256
KEEP_FRACTION = 0.5

# One-step toy pipeline
VAE_FACTOR = 4
PACK_FACTOR = 2
SR_SCALE = 2
T_MID = 0.3
LAMBDA_AP = 0.1
LEARNING_RATE = 1e-3
TOY_TOKEN_DIM = 64
TOY_HEADS = 2
TOY_LAYERS = 4
TOY_ROPE_DIM = 16
TOY_LAGS = (8, 16, 24)
INIT_STD = 0.02
ATTN_INIT_STD = 0.1           # qkv weights; attention logits are near zero at INIT_STD

# Ablation arms: name -> (use_rfr, uses L_AP)
ABLATION_ARMS = {
    "base": (False, False),
    "rfr": (True, False),
    "lap": (False, True),
    "both": (True, True),
}
