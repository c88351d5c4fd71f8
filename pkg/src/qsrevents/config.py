"""Pipeline configuration: thresholds for the calculi and preprocessing.

Stored as a flat ``key = value`` text file.  Blank lines and ``#`` comments
are ignored; unknown keys are rejected.
"""
import dataclasses
import hashlib
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .calculi import QtcParams
from .exceptions import InvalidInputError

CONFIG_ENV_VAR = "QSREVENTS_CONFIG"


@dataclass(frozen=True)
class PipelineConfig:
    theta: float = 0.05
    beta: float = float(np.pi / 36)
    v_min: float = 0.01
    eps_pos: float = 1e-9
    bin_width: float = 0.05
    max_bins: int = 40
    rate_hz: float = 24.0
    segment_frames: int = 20
    eps_speed: float = 1e-4
    eps_curvature: float = 1e-4
    # "ccw" closes each compass sector on its counterclockwise edge.
    cardir_boundary: str = "ccw"
    # "sign" one-hot encodes yaw/pitch/roll signs; "continuous" keeps radians.
    qtc3d_angles: str = "sign"

    def __post_init__(self):
        QtcParams(self.theta, self.beta)
        if self.bin_width <= 0 or self.max_bins < 1:
            raise InvalidInputError("bin_width must be > 0 and max_bins >= 1")
        if self.rate_hz <= 0 or self.segment_frames < 3:
            raise InvalidInputError("rate_hz must be > 0 and segment_frames >= 3")
        if self.cardir_boundary != "ccw":
            raise InvalidInputError("only the 'ccw' sector boundary convention is supported")
        if self.qtc3d_angles not in ("sign", "continuous"):
            raise InvalidInputError("qtc3d_angles must be 'sign' or 'continuous'")

    @property
    def qtc(self):
        return QtcParams(self.theta, self.beta)

    def to_text(self):
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n".replace("'", "")
                       for f in dataclasses.fields(self))

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def parse_config(text, base=None):
    base = base or PipelineConfig()
    types = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in types:
            raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = types[key](value)
        except ValueError as exc:
            raise InvalidInputError(f"line {lineno}: bad value for {key}: {value!r}") from exc
    return base.replace(**values)


def load_config(path=None):
    """Load a config file; falls back to $QSREVENTS_CONFIG, then defaults."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return PipelineConfig()
    return parse_config(Path(path).read_text())
