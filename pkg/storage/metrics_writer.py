"""CSV emission for metrics, evaluation and audit tables."""

from pathlib import Path

import pandas as pd

from storage.json_writer import atomic_write


def write_csv(path, rows: list, columns: list | None = None) -> Path:
    """Header + one row per dict, LF line endings, '.' decimals, 'nan' for missing values"""
    frame = pd.DataFrame(rows, columns=columns)
    text = frame.to_csv(index=False, lineterminator="\n", na_rep="nan", float_format="%.12g")
    return atomic_write(path, text.encode("utf-8"))


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path)


class MetricsWriter:
    """Accumulates one row per epoch and rewrites the CSV after each append"""

    def __init__(self, path, columns: list, rows: list | None = None):
        self.path = Path(path)
        self.columns = columns
        self.rows = list(rows or [])

    @classmethod
    def resume(cls, path, columns: list, upto_epoch: int) -> "MetricsWriter":
        """Keep rows for epochs < upto_epoch from an existing file"""
        path = Path(path)
        rows = []
        if path.is_file():
            frame = read_csv(path)
            rows = frame[frame["epoch"] < upto_epoch].to_dict(orient="records")
        return cls(path, columns, rows)

    def append(self, row: dict) -> Path:
        self.rows.append(row)
        return write_csv(self.path, self.rows, self.columns)
