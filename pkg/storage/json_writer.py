import json
import os
import tempfile
from pathlib import Path


def atomic_write(path, data: bytes) -> Path:
    """Write to a temp file next to ``path`` and rename it into place"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class JSONWriter:
    def write(self, path, payload: dict) -> Path:
        text = json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=False, default=str)
        return atomic_write(path, (text + "\n").encode("utf-8"))

    def read(self, path) -> dict:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
