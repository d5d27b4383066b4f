import sys
from pathlib import Path

# make the local test-only oracle modules importable regardless of rootdir
sys.path.insert(0, str(Path(__file__).resolve().parent))
