"""Run configuration: every tunable default in one place.

The CLI reads overrides from a JSON config file; reports echo the values
used so runs are reproducible.  Guards are empirical regression
thresholds, not theory constants.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


@dataclass
class RunConfig:
    seed: int = 0
    dense_threshold: int = 2000
    prescribe_tol: float = 1e-8
    prescribe_restarts: int = 32
    prescribe_iterations: int = 500
    eig_tol: float = 1e-9
    gap_slack: float = 0.5
    resample_budget: int = 100
    V_F: float = 1.0
    min_blocks_top_scale: int = 8
    delta_schedule: tuple = (1e-1, 1e-2, 1e-3)
    m_list: tuple = (4, 6, 8, 12, 16)
    reduction_guard: float = 0.2
    corridor_mass_guard: float = 10.0
    rescaled_guard: float = 0.25
    parasitic_retention: float = 0.5
    cheeger_floor: float = 0.05
    positivity_floor: float = 1e-12

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("delta_schedule", "m_list"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)
            fh.write("\n")

    def as_dict(self) -> dict:
        out = asdict(self)
        out["delta_schedule"] = list(self.delta_schedule)
        out["m_list"] = list(self.m_list)
        return out
