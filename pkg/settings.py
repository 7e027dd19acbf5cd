# settings.py
import os
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# --- Configuration ---
DEFAULT_MEMORY_BUDGET_BYTES = 2 * 1024 ** 3
DEFAULT_SEED = 42
DEFAULT_LOG_LEVEL = "WARNING"
BYTES_PER_SCALAR = 8


def get_memory_budget() -> int:
    """Densification budget in bytes; `TENSORKIT_MEMORY_BUDGET` overrides the 2 GiB default."""
    raw = os.getenv("TENSORKIT_MEMORY_BUDGET")
    if not raw:
        return DEFAULT_MEMORY_BUDGET_BYTES
    try:
        budget = int(raw)
    except ValueError:
        raise ValueError(f"TENSORKIT_MEMORY_BUDGET must be an integer byte count, got {raw!r}")
    if budget <= 0:
        raise ValueError("TENSORKIT_MEMORY_BUDGET must be positive")
    return budget


def get_default_seed() -> int:
    raw = os.getenv("TENSORKIT_DEFAULT_SEED")
    return int(raw) if raw else DEFAULT_SEED


def get_log_level() -> int:
    name = os.getenv("TENSORKIT_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
    return getattr(logging, name, logging.WARNING)
