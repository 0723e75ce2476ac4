import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).parent
OUTPUT_ROOT = BASE_DIR / "output"
REPORT_DIR = OUTPUT_ROOT / "reports"
DEFAULT_CACHE_DIR = OUTPUT_ROOT / "kernel_cache"

TOOL_VERSION = "0.3.0"

LOG_LEVEL = os.getenv("RESUM_LOG_LEVEL", "INFO")
OFFLINE = os.getenv("RESUM_OFFLINE", "0") == "1"

############# Numeric defaults #############
DEFAULT_TOL = 1e-10
DEFAULT_RHO0 = 1e3
DEFAULT_SECTOR_MARGIN = 0.2
GRID_DENSITY = 64          # points per decade for kernel caches and derived-weight tables
CONTOUR_DENSITY = 32       # points per decade along contours
MAX_SERIES_TERMS = 2 ** 18
MP_DPS_BUDGET = 1500
LOG_K_FLOOR = -300.0       # kernel caches stop once log|K| falls below this


def resolve_cache_dir(cli_value=None) -> Path:
    """
    Resolve the kernel cache directory.

    The RESUM_CACHE_DIR environment variable wins over the command-line value,
    which wins over the default under the output root.
    """
    env_value = os.getenv("RESUM_CACHE_DIR")
    if env_value:
        return Path(env_value)
    if cli_value:
        return Path(cli_value)
    return DEFAULT_CACHE_DIR
