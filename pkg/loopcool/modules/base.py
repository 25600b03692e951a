from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import inspect
import logging
from enum import Enum

import pandas as pd

from loopcool.core.config import ScenarioConfig


class CommandStatus(Enum):
    """Command execution status"""
    NOT_STARTED = "not_started"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class RunOptions:
    """Command-line settings shared by every command"""
    model: Optional[str] = None
    workers: int = 1
    tolerance: float = 1e-6
    quiet: bool = False


@dataclass
class ResultTable:
    """
    Plot-ready table: column names with units, rows, and header notes.

    ``notes`` end up as '# key: value' lines above the CSV header.
    """
    title: str
    columns: List[Tuple[str, str]]
    rows: List[List[Any]] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)

    @property
    def header(self) -> List[str]:
        return [f"{name} [{unit}]" if unit else name for name, unit in self.columns]

    def add(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.header)

    def __len__(self) -> int:
        return len(self.rows)


class CommandResult:
    """Normalized outcome of one command"""
    def __init__(
        self,
        status: CommandStatus,
        data: Optional[ResultTable],
        error: Optional[str] = None,
        metadata: Optional[Dict[str, Any]] = None,
        exception: Optional[BaseException] = None,
    ):
        self.status = status
        self.data = data
        self.error = error
        self.metadata = metadata or {}
        self.exception = exception

    @property
    def count(self) -> int:
        """Number of table rows"""
        return len(self.data) if self.data else 0

    def __repr__(self):
        return f"<CommandResult status={self.status.value} rows={self.count}>"


class BaseCommand(ABC):
    """
    Base class for every loopcool command.

    Provides:
    - Dependency injection (scenario, run options, logger)
    - Lifecycle hooks (validate, pre_execute, post_execute)
    - A normalized CommandResult that keeps the exception for exit-code mapping

    Subclasses implement:
    - name: Display name
    - execute: Build the result table
    """

    default_model = "reduced"

    def __init__(
        self,
        config: ScenarioConfig,
        options: RunOptions,
        logger: logging.Logger
    ):
        self.config: ScenarioConfig = config
        self.options: RunOptions = options
        self.logger: logging.Logger = logger
        self._status: CommandStatus = CommandStatus.NOT_STARTED

    @property
    @abstractmethod
    def name(self) -> str:
        """Human-readable name (e.g., "Parameter Sweep")"""
        pass

    @abstractmethod
    async def execute(self) -> ResultTable:
        """
        Run the computation.

        Raises:
            LoopcoolError: Any physics or numerics failure
        """
        pass

    async def pre_execute(self) -> None:
        pass

    async def post_execute(self, result: ResultTable) -> None:
        pass

    async def validate(self) -> bool:
        """
        Check that the scenario holds what the command needs.

        Raise ConfigError for a missing section; return False to skip.
        """
        return True

    def get_backends(self) -> List[str]:
        """
        Model backends usable by this command.

        Scans the wrappers module for classes whose ``commands`` list
        contains this command's identifier.
        """
        from loopcool.tools import wrappers

        command_id = self.__class__.__name__.lower()
        return [
            obj.name
            for _, obj in inspect.getmembers(wrappers, inspect.isclass)
            if getattr(obj, "name", None) and command_id in getattr(obj, "commands", ())
        ]

    def backend(self):
        """Backend instance selected by ``--model``."""
        from loopcool.tools.wrappers import get_backend

        model = self.options.model or self.default_model
        available = self.get_backends()
        if model not in available:
            from loopcool.core.errors import ParameterError
            raise ParameterError(
                f"{self.name} does not support model '{model}'. "
                f"Available: {', '.join(available)}"
            )
        return get_backend(model, workers=self.options.workers)

    async def run(self) -> CommandResult:
        """
        Execute the command with its full lifecycle.

        Every exception is caught, logged and returned as a FAILED result.
        """
        try:
            self._status = CommandStatus.RUNNING

            if not await self.validate():
                self.logger.warning(f"{self.name}: Validation failed")
                self._status = CommandStatus.SKIPPED
                return CommandResult(
                    status=CommandStatus.SKIPPED,
                    data=None,
                    error="Validation failed"
                )

            await self.pre_execute()
            table = await self.execute()
            await self.post_execute(table)

            self._status = CommandStatus.SUCCESS
            return CommandResult(
                status=CommandStatus.SUCCESS,
                data=table,
                metadata={'command': self.name}
            )

        except Exception as e:
            self.logger.error(f"{self.name} failed: {e}", exc_info=True)
            self._status = CommandStatus.FAILED
            return CommandResult(
                status=CommandStatus.FAILED,
                data=None,
                error=str(e),
                metadata={'command': self.name},
                exception=e,
            )

    @property
    def status(self) -> CommandStatus:
        """Current command status"""
        return self._status

    def __repr__(self):
        return f"<{self.__class__.__name__} status={self._status.value}>"
