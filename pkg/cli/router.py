# cli/router.py
"""Command routing for the ``tensorkit`` command line.

Each feature package owns a ``CommandRouter`` and registers handlers with a
pydantic request model; ``CommandApp`` collects the routers, builds the
argparse parser from the request fields and runs one command per process.
"""
import argparse
import logging
import shutil
import sys
import tempfile
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, TextIO, Type

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from cli.run_config import format_key_values, read_key_values, values_for_command
from exceptions import TensorKitError, UsageError

logger = logging.getLogger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.txt"


def _is_list(annotation) -> bool:
    origin = typing.get_origin(annotation)
    if origin in (list, tuple):
        return True
    if origin is typing.Union:
        return any(_is_list(arg) for arg in typing.get_args(annotation))
    return False


# --- Request base ---
class CommandRequest(BaseModel):
    """Request schema of one command; list fields also accept comma-separated text."""

    model_config = ConfigDict(extra="forbid")

    @field_validator("*", mode="before")
    @classmethod
    def _split_lists(cls, value, info):
        annotation = cls.model_fields[info.field_name].annotation
        if isinstance(value, str) and _is_list(annotation):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value


class OutputRequest(CommandRequest):
    """Requests of commands that write artifacts into ``output_dir``."""

    output_dir: Path


@dataclass
class RunContext:
    """Where a handler writes: a staging directory and the summary stream."""

    command: str
    stdout: TextIO
    stage_dir: Optional[Path] = None
    written: List[str] = field(default_factory=list)

    def path(self, name: str) -> Path:
        if self.stage_dir is None:
            raise UsageError(f"Command {self.command!r} has no output directory.")
        self.written.append(name)
        return self.stage_dir / name

    def echo(self, text: str = "") -> None:
        self.stdout.write(text + "\n")


Handler = Callable[[BaseModel, RunContext], int]


@dataclass(frozen=True)
class Command:
    name: str
    request_model: Type[CommandRequest]
    handler: Handler
    help: str = ""


class CommandRouter:
    def __init__(self):
        self.commands: Dict[str, Command] = {}

    def command(self, name: str, request_model: Type[CommandRequest], help: str = ""):
        def register(handler: Handler) -> Handler:
            self.commands[name] = Command(name, request_model, handler, help)
            return handler

        return register


def _add_request_arguments(parser: argparse.ArgumentParser, model: Type[CommandRequest]) -> None:
    parser.add_argument("--config", default=None, help="key = value run configuration; flags override it")
    for name, info in model.model_fields.items():
        flag = "--" + name.replace("_", "-")
        if info.annotation is bool:
            parser.add_argument(flag, dest=name, action="store_const", const="true", default=None, help=info.description)
        else:
            parser.add_argument(flag, dest=name, default=None, help=info.description)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _validation_message(command: str, error: ValidationError) -> str:
    lines = [f"Invalid {command} request:"]
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "request"
        lines.append(f"  {location}: {item['msg']}")
    return "\n".join(lines)


class CommandApp:
    def __init__(self, prog: str = "tensorkit", description: str = ""):
        self.prog = prog
        self.description = description
        self.commands: Dict[str, Command] = {}

    def include_router(self, router: CommandRouter) -> None:
        for name, command in router.commands.items():
            if name in self.commands:
                raise ValueError(f"Command {name!r} registered twice.")
            self.commands[name] = command

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(prog=self.prog, description=self.description)
        subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
        for name, command in self.commands.items():
            _add_request_arguments(subparsers.add_parser(name, help=command.help), command.request_model)
        return parser

    def resolve(self, argv: List[str]) -> typing.Tuple[Command, CommandRequest]:
        """Parse flags, merge them over the config file and validate the request."""
        args = vars(self.build_parser().parse_args(argv))
        name = args.pop("command")
        if name is None:
            raise UsageError(f"{self.prog}: a command is required ({', '.join(self.commands)}).")
        command = self.commands[name]
        fields = command.request_model.model_fields
        values: Dict[str, object] = {}
        config_path = args.pop("config")
        if config_path is not None:
            values.update(values_for_command(read_key_values(config_path), name, fields))
        values.update({key: value for key, value in args.items() if value is not None})
        try:
            request = command.request_model.model_validate(values)
        except ValidationError as e:
            raise UsageError(_validation_message(name, e))
        return command, request

    def run(self, argv: List[str], stdout: Optional[TextIO] = None) -> int:
        stdout = sys.stdout if stdout is None else stdout
        try:
            command, request = self.resolve(argv)
            return self._execute(command, request, stdout)
        except TensorKitError as e:
            sys.stderr.write(e.detail + "\n")
            return e.exit_code

    def _execute(self, command: Command, request: CommandRequest, stdout: TextIO) -> int:
        resolved = format_key_values(command.name, request.model_dump(mode="json"))
        output_dir = getattr(request, "output_dir", None)
        if output_dir is None:
            logger.info("resolved config:\n" + "\n".join(resolved))
            return command.handler(request, RunContext(command.name, stdout))

        output_dir = Path(output_dir)
        output_dir.parent.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".tensorkit-", dir=output_dir.parent))
        try:
            context = RunContext(command.name, stdout, stage_dir=stage)
            context.path(RESOLVED_CONFIG_NAME).write_text("\n".join(resolved) + "\n", encoding="utf-8")
            status = command.handler(request, context)
            output_dir.mkdir(exist_ok=True)
            for name in context.written:
                (stage / name).replace(output_dir / name)
            logger.info(f"{command.name}: wrote {len(context.written)} file(s) to {output_dir}")
            return status
        finally:
            shutil.rmtree(stage, ignore_errors=True)
