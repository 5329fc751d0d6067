"""Shared CLI state, configuration resolution and error reporting."""

from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

import typer
from pydantic import BaseModel, ValidationError

from ..lib.config import DEFAULT_SEED, load_key_value_config
from ..lib.errors import ConfigError, DrrmError, format_machine_line
from ..lib.logging import get_logger
from ..models.registration import RegistrationConfig

logger = get_logger(__name__)


class CliState(BaseModel):
    """Global options given before the sub-command."""

    seed: Optional[int] = None
    config: Optional[Path] = None
    jobs: int = 1
    quiet: bool = False


def get_state(ctx: Optional[typer.Context]) -> CliState:
    if ctx is None or not isinstance(ctx.obj, CliState):
        return CliState()
    return ctx.obj


def effective_seed(state: CliState) -> int:
    return DEFAULT_SEED if state.seed is None else state.seed


def resolve_config(
    state: CliState,
    config_path: Optional[Path] = None,
    **overrides: Any,
) -> RegistrationConfig:
    """
    Build the registration configuration.

    Precedence, lowest first: defaults, the global ``--config`` file, the
    command's ``--config`` file, the global ``--seed``, explicit flags.

    Raises:
        ConfigError: On unknown keys or values that fail validation
    """
    values: Dict[str, Any] = {}
    for path in (state.config, config_path):
        if path is not None:
            if not Path(path).is_file():
                raise ConfigError(f"{path}: config file not found")
            values.update(load_key_value_config(path))
    if state.seed is not None:
        values["seed"] = state.seed
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RegistrationConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        field = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"invalid value for '{field}': {error['msg']}") from e


def machine_line_for(error: BaseException, command: str) -> str:
    """Single-line ``stage= code= msg=`` rendering of any exception."""
    if isinstance(error, DrrmError):
        return error.machine_line()
    return format_machine_line(command, type(error).__name__, str(error))


@contextmanager
def command_errors(command: str) -> Iterator[None]:
    """Turn any failure into the machine line on stderr and exit code 1."""
    try:
        yield
    except typer.Exit:
        raise
    except Exception as e:
        logger.error(f"{command.replace('-', '_')}_failed", error=str(e), code=getattr(e, "code", type(e).__name__))
        typer.echo(machine_line_for(e, command), err=True)
        raise typer.Exit(code=1)
