import os

# Default value for LRU cache maxsize
LRU_CACHE_MAXSIZE: int = int(os.environ.get("LRU_CACHE_MAXSIZE", 1024))

# Largest number of subsets the brute-force oracle is allowed to enumerate
ORACLE_MAX_SETS: int = int(os.environ.get("ROBSUB_ORACLE_MAX_SETS", 2**20))

# Wall-clock limit (seconds) for a single oracle enumeration
ORACLE_TIMEOUT: float = float(os.environ.get("ROBSUB_ORACLE_TIMEOUT", 60))

LOG_LEVEL: str = os.environ.get("ROBSUB_LOG_LEVEL", "WARNING")

# Numeric slack shared by solvers and feasibility checks
TOLERANCE: float = 1e-9
