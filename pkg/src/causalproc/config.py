"""Numerical tolerances used throughout the package.

All constructions in scope are exact up to floating-point noise, so the
defaults are tight.  The CLI honours ``CAUSALPROC_TOL_*`` environment
variables; library callers can pass explicit overrides to the few functions
that take a tolerance argument.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, asdict, fields

# Hermiticity / positivity of operators.
HERM_TOL = 1e-10
PSD_TOL = 1e-10
# Process-matrix trace and Born-rule normalisation residuals.
TRACE_TOL = 1e-8
BORN_TOL = 1e-8
# Signalling scans (total-variation threshold).
SIGNAL_TOL = 1e-9
# Probability support threshold for perfect discrimination.
SUPPORT_TOL = 1e-10
# Exact coincidences (mixture identity, outcome encoding round trip).
EXACT_TOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    herm: float = HERM_TOL
    psd: float = PSD_TOL
    trace: float = TRACE_TOL
    born: float = BORN_TOL
    signal: float = SIGNAL_TOL
    support: float = SUPPORT_TOL
    exact: float = EXACT_TOL

    @classmethod
    def from_env(cls) -> "Tolerances":
        """Build tolerances, letting CAUSALPROC_TOL_<NAME> override a field."""
        kwargs = {}
        for f in fields(cls):
            raw = os.environ.get(f"CAUSALPROC_TOL_{f.name.upper()}")
            if raw is not None:
                value = float(raw)
                if value <= 0:
                    raise ValueError(f"tolerance {f.name} must be positive, got {value}")
                kwargs[f.name] = value
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return asdict(self)
