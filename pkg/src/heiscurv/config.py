"""Solver defaults shared by the library sweeps and the command line."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace


@dataclass(frozen=True)
class RunConfig:
    resolution: int = 4096          # dual-grid cells of the trig table
    grid_s: int = 512               # s-nodes of the curvature sweep
    grid_r: int = 1024              # r-nodes of the curvature sweep
    band: float = 0.02              # excluded width near r = 0 and r = 1
    refine_tol: float = 1e-6        # golden-section tolerance in r
    j_floor: float = 1e-10          # reduced Jacobian treated as zero below this
    eps_omega: float = 1e-4         # |omega| < eps_omega * pi_polar uses the limit N = 5
    mcp_phi: int = 128
    mcp_omega: int = 256
    mcp_t: tuple = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95,
                    0.99, 0.999, 0.9999, 0.99999)
    mcp_slack_tol: float = 1e-9
    mcp_bisect_tol: float = 1e-3
    coarse_s: int = 128             # sweep used inside the prescription bisection
    coarse_r: int = 256
    eps_t: float = 0.02             # upper guard t <= 1 - eps_t of the interpolation family
    affine_tol: float = 1e-8
    threads: int | None = None
    output_format: str = "json"
    output: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("band", "refine_tol", "j_floor", "eps_omega", "mcp_slack_tol",
                     "mcp_bisect_tol", "eps_t", "affine_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("resolution", "grid_s", "grid_r", "mcp_phi", "mcp_omega", "coarse_s", "coarse_r"):
            if getattr(self, name) < 64:
                raise ValueError(f"{name} must be at least 64")
        if not 0 < self.band < 0.5:
            raise ValueError("band must lie in (0, 1/2)")
        if any(not 0 < t <= 1 for t in self.mcp_t):
            raise ValueError("mcp_t values must lie in (0, 1]")
        object.__setattr__(self, "mcp_t", tuple(float(t) for t in self.mcp_t))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def update(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mcp_t"] = list(self.mcp_t)
        return d

    def workers(self) -> int:
        """Worker count: ``threads`` if set, capped by HEISCURV_THREADS."""
        n = self.threads or os.cpu_count() or 1
        cap = os.environ.get("HEISCURV_THREADS")
        if cap:
            n = min(n, max(1, int(cap)))
        return max(1, n)
