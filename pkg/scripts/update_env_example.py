"""Regenerate .env.example from the fusionproc Settings model."""
from __future__ import annotations

from pathlib import Path
import sys
from typing import Any, List


PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from fusionproc.core.config import Settings


HEADER = (
    "# Example environment configuration for fusionproc\n"
    "# This file is generated by scripts/update_env_example.py based on fusionproc.core.config.Settings.\n"
    "# Do not edit manually; update the Settings model instead.\n"
)


def _env_names(field: Any) -> List[str]:
    env = field.field_info.extra.get("env")
    if env:
        raw = list(env) if isinstance(env, (list, tuple, set)) else [env]
    else:
        raw = sorted(field.field_info.extra.get("env_names") or {field.name})
    names: List[str] = []
    for name in raw:
        normalized = str(name).strip().upper()
        if normalized and normalized not in names:
            names.append(normalized)
    return names


def _format_default(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def generate_env_example() -> str:
    lines: List[str] = [HEADER.rstrip()]
    for field in Settings.__fields__.values():
        names = _env_names(field)
        if not names:
            continue
        description = field.field_info.description
        lines.append(f"\n# {description}" if description else "")
        default = _format_default(field.get_default())
        lines.append(f"{names[0]}={default}")
        lines.extend(f"# Alternative: {name}={default}" for name in names[1:])
    lines.append("")
    return "\n".join(lines)


def write_env_example(target: Path | None = None) -> Path:
    target = target or PROJECT_ROOT / ".env.example"
    target.write_text(generate_env_example(), encoding="utf-8")
    return target


if __name__ == "__main__":
    print(f"Wrote {write_env_example()}")
