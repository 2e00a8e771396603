from pathlib import Path

import numpy as np

from utils.exceptions import ConfigError, NumericError


def require_finite(array: np.ndarray, what: str, layer: str | None = None, step: int | None = None):
    if not np.all(np.isfinite(array)):
        raise NumericError(f"Non-finite values in {what}", layer=layer, step=step)


def require_file(path, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def require_writable_dir(path, what: str) -> Path:
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise ConfigError(f"{what} is not a directory: {path}")
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"{what} cannot be created: {path} ({e})") from e
    return path
