"""Harness configuration with JSON-file loading and override precedence."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .decode import NmsParams
from .matching import GridSpec


@dataclass(frozen=True)
class HarnessConfig:
    """Tunable knobs shared by the CLI commands.

    Precedence when assembling a config is: built-in defaults, then a JSON
    config file, then explicit command-line flags.
    """

    k: int = 7
    n: int = 100
    lambda_s: float = 2.0
    top_n: int = 100
    t: float = 0.9
    w: float = 4.0
    beta: float = 1.0 / 9.0
    alpha: float = 0.375
    gamma: float = 2.0
    nms: NmsParams = field(default_factory=NmsParams)
    grid: GridSpec = field(default_factory=lambda: GridSpec(dims=(24, 24, 24), stride=4.0))
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        """Plain-JSON rendering, used for run-metadata echo."""
        return {
            "k": self.k,
            "n": self.n,
            "lambda_s": self.lambda_s,
            "top_n": self.top_n,
            "t": self.t,
            "w": self.w,
            "beta": self.beta,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "nms": {"tau_siou": self.nms.tau_siou, "tau_dr": self.nms.tau_dr},
            "grid": {"dims": list(self.grid.dims), "stride": self.grid.stride},
            "seed": self.seed,
        }


_SCALAR_KEYS = {
    "k": int,
    "n": int,
    "lambda_s": float,
    "top_n": int,
    "t": float,
    "w": float,
    "beta": float,
    "alpha": float,
    "gamma": float,
    "seed": int,
}


def _build(base: HarnessConfig, overrides: Mapping[str, Any], origin: str) -> HarnessConfig:
    changes: Dict[str, Any] = {}
    for key, value in overrides.items():
        if key in _SCALAR_KEYS:
            changes[key] = _SCALAR_KEYS[key](value)
        elif key == "nms":
            if not isinstance(value, Mapping):
                raise ValueError(f"{origin}: 'nms' must be an object")
            nms_kwargs = {"tau_siou": base.nms.tau_siou, "tau_dr": base.nms.tau_dr}
            for sub, subval in value.items():
                if sub not in nms_kwargs:
                    raise ValueError(f"{origin}: unknown nms key {sub!r}")
                nms_kwargs[sub] = float(subval)
            changes["nms"] = NmsParams(**nms_kwargs)
        elif key == "grid":
            if not isinstance(value, Mapping):
                raise ValueError(f"{origin}: 'grid' must be an object")
            dims, stride = base.grid.dims, base.grid.stride
            for sub, subval in value.items():
                if sub == "dims":
                    if not isinstance(subval, (list, tuple)) or len(subval) != 3:
                        raise ValueError(f"{origin}: grid dims must have 3 entries")
                    dims = tuple(int(v) for v in subval)
                elif sub == "stride":
                    stride = float(subval)
                else:
                    raise ValueError(f"{origin}: unknown grid key {sub!r}")
            changes["grid"] = GridSpec(dims=dims, stride=stride)
        else:
            raise ValueError(f"{origin}: unknown config key {key!r}")
    return dataclasses.replace(base, **changes) if changes else base


def load_config(path: Optional[Path] = None, **cli_overrides: Any) -> HarnessConfig:
    """Builds a HarnessConfig from defaults, an optional JSON file, and flags.

    ``cli_overrides`` entries whose value is None are ignored, so argparse
    defaults can be passed through unconditionally.
    """
    config = HarnessConfig()
    if path is not None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config root must be a JSON object")
        config = _build(config, raw, str(path))
    flags = {k: v for k, v in cli_overrides.items() if v is not None}
    return _build(config, flags, "command line")
