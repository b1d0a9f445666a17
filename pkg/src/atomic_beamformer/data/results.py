"""
Result tables written by the experiment commands.

A result file is a CSV preceded by '# key: value' comment lines holding the
run metadata (configuration hash, seed, version, subcommand). Floats are
written with 17 significant digits so a file read back reproduces the table
exactly. Figures are rendered as SVG with a fixed hash salt and no date, so
identical tables give identical files.
"""

import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..app_meta import CSV_FLOAT_FORMAT, SVG_HASH_SALT, get_version_string  # noqa: E402
from ..utils.file_utils import ensure_parent_exists  # noqa: E402

logger = logging.getLogger(__name__)

METADATA_PREFIX = "# "


@dataclass
class ResultTable:
    """Named result frame plus the metadata echoed in its file header."""
    name: str
    frame: pd.DataFrame
    metadata: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def for_run(
        cls,
        name: str,
        frame: pd.DataFrame,
        config_hash: str,
        seed: Optional[int] = None,
        **extra: Any,
    ) -> "ResultTable":
        metadata = {
            "subcommand": name,
            "config_hash": config_hash,
            "seed": "none" if seed is None else seed,
            "version": get_version_string(),
        }
        metadata.update(extra)
        return cls(name, frame, metadata)

    def to_csv(self) -> str:
        """Header comments followed by the CSV body."""
        header = "".join(
            f"{METADATA_PREFIX}{key}: {value}\n" for key, value in self.metadata.items()
        )
        body = self.frame.to_csv(
            index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n"
        )
        return header + body

    def write(self, path: Union[str, Path]) -> Path:
        path = ensure_parent_exists(path)
        path.write_text(self.to_csv(), encoding="utf-8", newline="")
        logger.info(f"Wrote {len(self.frame)} rows to {path}")
        return path

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> "ResultTable":
        """Parse text produced by to_csv."""
        metadata: Dict[str, Any] = {}
        lines = text.splitlines(keepends=True)
        body_start = 0
        for body_start, line in enumerate(lines):
            if not line.startswith(METADATA_PREFIX):
                break
            key, _, value = line[len(METADATA_PREFIX):].rstrip("\n").partition(": ")
            metadata[key] = value
        else:
            body_start = len(lines)
        body = io.StringIO("".join(lines[body_start:]))
        frame = pd.read_csv(body, float_precision="round_trip")
        return cls(name or metadata.get("subcommand", ""), frame, metadata)

    @classmethod
    def read(cls, path: Union[str, Path]) -> "ResultTable":
        return cls.from_csv(Path(path).read_text(encoding="utf-8"))


def render_svg(
    table: ResultTable,
    path: Union[str, Path],
    x: str,
    columns: Sequence[str],
    logx: bool = False,
    to_db: bool = False,
    ylabel: str = "",
    title: Optional[str] = None,
) -> Path:
    """Line plot of `columns` against `x`; failed or non-finite rows are skipped."""
    path = ensure_parent_exists(path)
    frame = table.frame
    if "status" in frame:
        frame = frame[frame["status"] == "ok"]

    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        for column in columns:
            values = frame[column].to_numpy(dtype=float)
            if to_db:
                with np.errstate(divide="ignore", invalid="ignore"):
                    values = 10.0 * np.log10(values)
            ax.plot(frame[x].to_numpy(dtype=float), values, label=column)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(x)
        ax.set_ylabel(ylabel)
        ax.set_title(title if title is not None else table.name)
        ax.grid(True, alpha=0.3)
        if len(columns) > 1:
            ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info(f"Wrote figure {path}")
    return path
