import hashlib
import os
import json
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

DEFAULT_WINDING_BOUND = 3
DEFAULT_MAX_TENSOR = 3
DEFAULT_U_ORDER = 2
DEFAULT_QUIVER_VERTEX_BOUND = 7
DEFAULT_CHECKPOINT_DIR = "checkpoints"
DEFAULT_SEED = 0


@dataclass(frozen=True)
class Settings:
    """Bounds and paths for one run. Every report carries these values."""

    winding_bound: int = DEFAULT_WINDING_BOUND
    max_tensor: int = DEFAULT_MAX_TENSOR
    u_order: int = DEFAULT_U_ORDER
    quiver_vertex_bound: int = DEFAULT_QUIVER_VERTEX_BOUND
    threads: int = 1
    seed: int = DEFAULT_SEED
    checkpoint_dir: str = DEFAULT_CHECKPOINT_DIR

    def as_dict(self) -> Dict[str, Any]:
        return {
            "winding_bound": self.winding_bound,
            "max_tensor": self.max_tensor,
            "u_order": self.u_order,
            "quiver_vertex_bound": self.quiver_vertex_bound,
            "threads": self.threads,
            "seed": self.seed,
        }

    def override(self, **kwargs: Any) -> "Settings":
        """Returns a copy with every non-None keyword applied."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"{name}={raw!r} is not an integer, using {default}")
        return default
    if value < 0:
        logger.warning(f"{name}={value} is negative, using {default}")
        return default
    return value


def load_settings(env_path: str = ".env") -> Settings:
    """Loads bounds from the .env file (if any) and the environment."""
    load_dotenv(dotenv_path=env_path)
    return Settings(
        winding_bound=_int_env("PRECY_WINDING_BOUND", DEFAULT_WINDING_BOUND),
        max_tensor=_int_env("PRECY_MAX_TENSOR", DEFAULT_MAX_TENSOR),
        u_order=_int_env("PRECY_U_ORDER", DEFAULT_U_ORDER),
        quiver_vertex_bound=_int_env("PRECY_QUIVER_VERTEX_BOUND", DEFAULT_QUIVER_VERTEX_BOUND),
        threads=max(1, _int_env("PRECY_THREADS", 1)),
        seed=_int_env("PRECY_SEED", DEFAULT_SEED),
        checkpoint_dir=os.getenv("PRECY_CHECKPOINT_DIR") or DEFAULT_CHECKPOINT_DIR,
    )


def inputs_digest(*parts: Any) -> str:
    """Short sha256 of the JSON-serialized inputs; names checkpoints that depend on them."""
    text = json.dumps(parts, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def save_checkpoint(settings: Settings, name: str, payload: Dict[str, Any]) -> str:
    """Saves a pipeline checkpoint as sorted JSON and returns its path."""
    os.makedirs(settings.checkpoint_dir, exist_ok=True)
    path = os.path.join(settings.checkpoint_dir, f"{name}.json")
    try:
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
        logger.info(f"Checkpoint saved to {path}")
    except IOError as e:
        logger.error(f"Error writing checkpoint {path}: {e}")
        raise
    return path


def load_checkpoint(settings: Settings, name: str) -> Optional[Dict[str, Any]]:
    """Loads a checkpoint, or returns None when it is missing or unreadable."""
    path = os.path.join(settings.checkpoint_dir, f"{name}.json")
    if not os.path.exists(path):
        return None
    try:
        with open(path, "r") as f:
            data: Dict[str, Any] = json.load(f)
        logger.info(f"Resuming from checkpoint {path}")
        return data
    except (IOError, json.JSONDecodeError) as e:
        logger.warning(f"Error reading checkpoint {path}: {e}. Starting fresh.")
        return None
