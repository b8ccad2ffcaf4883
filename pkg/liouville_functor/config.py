"""Environment-driven defaults."""

import os

from dotenv import load_dotenv

load_dotenv()

DEFAULT_PRECISION = int(os.getenv("LIOUVILLE_PRECISION", "50"))
DEFAULT_THREADS = int(os.getenv("LIOUVILLE_THREADS", "1"))
DEFAULT_SEED = int(os.getenv("LIOUVILLE_SEED", "0"))

MIN_PRECISION = 15

# Enumeration and move graphs are only meant for small surfaces.
MAX_MODULI_DIMENSION = 6
