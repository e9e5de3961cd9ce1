import os
from pathlib import Path

from dotenv import load_dotenv

BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / ".env")

OUTPUT_DIR = os.environ.get("HELMRAY_OUTPUT_DIR", str(BASE_DIR / "output"))
MAX_THREADS = max(1, int(os.environ.get("HELMRAY_MAX_THREADS", str(os.cpu_count() or 1))))
LOG_LEVEL = os.environ.get("HELMRAY_LOG_LEVEL", "INFO").upper()

AMPLITUDE_FLOOR = float(os.environ.get("HELMRAY_AMPLITUDE_FLOOR", "1e-8"))  # times max launch amplitude
ORACLE_MAX_POINTS = int(os.environ.get("HELMRAY_ORACLE_MAX_POINTS", "4000000"))
