"""Run settings shared by the command line and the scenario runner."""
import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from errors import ConfigError
from generators import GenConfig
from simulation import PlanItem, TestPlan

LOGGER = logging.getLogger("refine.config")


@dataclass(frozen=True)
class Config:
    seed: int = 0
    iters: int = 100
    fuel: int = 20000
    # Target steps allowed between two synchronisation points.
    max_stutter: int = 5000
    max_blocks: int = 4
    max_cells: int = 8
    max_mappings: int = 3
    max_ops: int = 6
    samples: int = 200
    plan_size: int = 8

    def gen_config(self) -> GenConfig:
        return GenConfig(self.max_blocks, self.max_cells, self.max_mappings, self.max_ops)

    def plan(self, items: List[PlanItem]) -> TestPlan:
        return TestPlan(items, self.fuel, self.max_stutter)

    def override(self, **values: Optional[int]) -> "Config":
        """A copy with every value that is not None replaced."""
        changes = {k: v for k, v in values.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def to_json(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def config_from_json(obj: Any) -> Config:
    if not isinstance(obj, dict):
        raise ConfigError("a configuration must be a JSON object")
    fields = {f.name for f in dataclasses.fields(Config)}
    unknown = sorted(set(obj) - fields)
    if unknown:
        raise ConfigError(f"unknown settings: {', '.join(unknown)}")
    for key, value in obj.items():
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        if value < 0:
            raise ConfigError(f"{key} must not be negative")
    return Config(**obj)


def load_config(path: Optional[str]) -> Config:
    if path is None:
        return Config()
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as ex:
        raise ConfigError(f"cannot read {path}: {ex.strerror}") from ex
    except json.JSONDecodeError as ex:
        raise ConfigError(f"{path}: {ex.msg} at line {ex.lineno}") from ex
    cfg = config_from_json(obj)
    LOGGER.debug("loaded %s", cfg)
    return cfg
