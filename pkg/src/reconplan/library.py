"""Access to the bundled instance library and its reference values."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .mission import Mission, MultiPlan, load_mission, load_plans

# success means reaching the reference value within this tolerance
SUCCESS_TOL = 1e-6


def instance_path(filename: str) -> Path:
    return Path(str(resources.files("reconplan") / "instances" / filename))


@lru_cache(maxsize=None)
def manifest() -> dict:
    return json.loads(instance_path("manifest.json").read_text(encoding="utf-8"))["instances"]


def mission(name: str) -> Mission:
    """Mission of a manifest entry (``fig1``, ``k10``, ``k6-multi``, ...) or a bare file stem."""
    entries = manifest()
    filename = entries[name]["mission"] if name in entries else f"{name}.json"
    return load_mission(instance_path(filename))


def plan(name: str, which: str = "best") -> MultiPlan:
    return load_plans(instance_path(manifest()[name]["plans"][which]))


def reference(name: str) -> float:
    return float(manifest()[name]["reference"])
