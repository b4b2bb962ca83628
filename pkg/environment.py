from typing import Dict, Optional

from mem import Value


class Environment:
    """Variables of one MiniC activation.

    Register variables hold their value here directly. Every other variable
    names the memory block that holds it. Environments are never mutated:
    set and bind return a new one, so suspended frames stay intact.
    """

    def __init__(self, temps: Optional[Dict[str, Value]] = None,
                 blocks: Optional[Dict[str, int]] = None) -> None:
        self._temps: Dict[str, Value] = temps or {}
        self._blocks: Dict[str, int] = blocks or {}

    def get(self, name: str) -> Optional[Value]:
        return self._temps.get(name)

    def has_temp(self, name: str) -> bool:
        return name in self._temps

    def block(self, name: str) -> Optional[int]:
        return self._blocks.get(name)

    def set(self, name: str, value: Value) -> "Environment":
        temps = dict(self._temps)
        temps[name] = value
        return Environment(temps, self._blocks)

    def bind(self, name: str, b: int) -> "Environment":
        blocks = dict(self._blocks)
        blocks[name] = b
        return Environment(self._temps, blocks)

    def temps(self) -> Dict[str, Value]:
        return dict(self._temps)

    def blocks(self) -> Dict[str, int]:
        return dict(self._blocks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Environment):
            return NotImplemented
        return self._temps == other._temps and self._blocks == other._blocks

    def __hash__(self) -> int:
        return hash((tuple(sorted(self._temps.items(), key=lambda kv: kv[0])),
                     tuple(sorted(self._blocks.items()))))

    def string(self) -> str:
        parts = [f"{n}={v.string()}" for n, v in sorted(self._temps.items(), key=lambda kv: kv[0])]
        parts += [f"{n}@{b}" for n, b in sorted(self._blocks.items())]
        return "{" + ", ".join(parts) + "}"
