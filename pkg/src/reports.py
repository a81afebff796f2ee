"""
Result Writers
CSV output for every CLI subcommand
"""

import sys
from pathlib import Path
from typing import Optional, Union

import pandas as pd
from loguru import logger

from src.analyzers.resilience import RESILIENCE_COLUMNS
from src.exceptions import ConfigError

# Floats are written with a fixed format so reruns are byte-identical.
FLOAT_FORMAT = "%.6f"


def write_csv(frame: pd.DataFrame, out: Optional[Union[str, Path]]) -> None:
    """Write ``frame`` to ``out``, or to standard output when ``out`` is None or ``-``."""
    if out is None or str(out) == "-":
        frame.to_csv(sys.stdout, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
        return
    path = Path(out)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")


def read_beta_csv(path: Union[str, Path]) -> pd.Series:
    """The ``beta`` column of a resilience CSV."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise ConfigError("empty resilience CSV", str(path)) from None
    if "beta" not in frame.columns:
        raise ConfigError(f"expected columns {RESILIENCE_COLUMNS}", str(path))
    return frame["beta"].astype(float)


def hijack_frame(outcome) -> pd.DataFrame:
    """Per-AS outcome of one hijack simulation."""
    rows = []
    for asn in sorted(outcome.classification):
        route = outcome.rib.route(asn)
        rows.append({
            "asn": asn,
            "outcome": outcome.classification[asn].value,
            "route_class": route.route_class.value if route else "",
            "path_length": route.length if route else "",
            "as_path": " ".join(str(a) for a in route.as_path) if route else "",
        })
    return pd.DataFrame(rows, columns=["asn", "outcome", "route_class", "path_length", "as_path"])
