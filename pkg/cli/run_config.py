# cli/run_config.py
"""Flat ``key = value`` run configuration with dotted keys, in dotenv syntax.

    # shared by every command
    seed = 7
    decompose.rank = 3
    column.station.role = coordinate
"""
import io
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Union

from dotenv.parser import parse_stream

from exceptions import DataError, UsageError


def _binding_line(original) -> int:
    """Line of the binding itself; the parser's mark sits before any leading blank lines."""
    text = original.string
    leading = text[: len(text) - len(text.lstrip())]
    return original.line + leading.count("\n")


def parse_key_values(text: str, source: str = "<config>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for binding in parse_stream(io.StringIO(text)):
        if binding.error or (binding.key is not None and binding.value is None):
            line = _binding_line(binding.original)
            raise DataError(f"{source}:{line}: expected 'key = value', got {binding.original.string.strip()!r}.")
        if binding.key is None:
            continue
        values[binding.key] = binding.value
    return values


def read_key_values(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"Config file {path} does not exist.")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not UTF-8 text ({e.reason}).")
    return parse_key_values(text, source=str(path))


def values_for_command(values: Mapping[str, str], command: str, fields: Iterable[str]) -> Dict[str, str]:
    """Bare keys the command knows, then ``<command>.<key>`` entries, which must be known."""
    fields = set(fields)
    selected = {key: value for key, value in values.items() if "." not in key and key in fields}
    prefix = command + "."
    for key, value in values.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix):].replace("-", "_")
        if name not in fields:
            raise UsageError(f"Unknown config key {key!r} for command {command!r}.")
        selected[name] = value
    return selected


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def format_key_values(command: str, values: Mapping[str, object]) -> List[str]:
    """Resolved-config lines; ``None`` values are left out."""
    return [f"{command}.{key} = {_format_value(value)}" for key, value in values.items() if value is not None]
