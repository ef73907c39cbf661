import json
from pathlib import Path

import numpy as np
import pandas as pd


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def save_json(data, filename):
    with open(filename, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=4, default=_default)


def save_csv(frame: pd.DataFrame, filename):
    """Write a simulation table as CSV; floats keep 17 significant digits."""
    Path(filename).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(filename, index=False, float_format="%.17g", lineterminator="\n")
