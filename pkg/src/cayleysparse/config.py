"""Numerical tolerances, kept in one record.

Set ``CAYLEYSPARSE_TOLERANCES`` to a JSON file whose keys are field names of
:class:`Tolerances` to override the defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from functools import lru_cache

ENV_VAR = "CAYLEYSPARSE_TOLERANCES"


@dataclass(frozen=True)
class Tolerances:
    # ||M - M^T|| <= symmetry * ||M|| for "symmetric" inputs
    symmetry: float = 1e-10
    # eigenvalue cutoff is zero_factor * n * ||M||_op
    zero_factor: float = 1e-12
    # ||P_null L_test P_null|| <= range_factor * max(||L_test||, 1)
    range_factor: float = 1e-8
    # slack added to the (1 +- eps) band by the verifiers
    verify_slack: float = 1e-7
    # scores and importances may exceed 1 by this much
    score_slack: float = 1e-8
    # minimal v^T L_H v / ||v||^2 relative to ||L_H|| for score()
    energy_floor: float = 1e-12


def load_tolerances(path: str | None = None) -> Tolerances:
    base = Tolerances()
    if path is None:
        return base
    with open(path) as fh:
        overrides = json.load(fh)
    known = {f.name for f in fields(Tolerances)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    return replace(base, **{k: float(v) for k, v in overrides.items()})


@lru_cache(maxsize=None)
def _from_env(path: str | None) -> Tolerances:
    return load_tolerances(path)


def get_tolerances() -> Tolerances:
    return _from_env(os.environ.get(ENV_VAR) or None)
