"""Plain-text ``key = value`` configuration files."""
from __future__ import annotations

import os
from typing import Dict, List, Tuple

from .errors import ConfigError

__all__ = ["read_config", "write_config", "update_config", "parse_lambda"]


def read_config(path) -> Dict[str, str]:
    """Parse a config file. ``#`` starts a comment; blank lines are ignored."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    out: Dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_config(path, cfg: Dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in cfg.items():
            fh.write(f"{key} = {value}\n")


def update_config(path, new: Dict[str, str]) -> None:
    """Merge ``new`` into the file at ``path`` (created if missing)."""
    cfg = read_config(path) if os.path.exists(path) else {}
    cfg.update(new)
    write_config(path, cfg)


def parse_lambda(text: str) -> List[Tuple[float, float]]:
    """Parse ``"d1:c1, d2:c2"`` into ``[(d1, c1), (d2, c2)]``."""
    terms = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"bad lambda term {chunk!r}, expected degree:coef")
        d, c = chunk.split(":", 1)
        try:
            terms.append((float(d), float(c)))
        except ValueError as exc:
            raise ConfigError(f"bad lambda term {chunk!r}") from exc
    if not terms:
        raise ConfigError("empty lambda specification")
    return terms
