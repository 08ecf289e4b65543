"""
Shared plumbing for the CFDG management commands: reading inputs (`-` is
standard input), writing outputs, common flags, verbosity and the exit-code
contract.
"""

import logging
import sys
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import CfdgError
from core.services.coverage import Criterion, IndependenceSemantics
from core.services.dot_codec import Dialect
from core.services.runs_traces import LoopMode

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVARIANT = 2
EXIT_BELOW_FULL = 3

_VERBOSITY_LEVELS = {2: logging.INFO, 3: logging.DEBUG}


def cfdg_setting(key):
    return getattr(settings, "CFDG", {}).get(key)


class CfdgCommand(BaseCommand):
    """
    Base for the toolkit commands. Subclasses implement run(); service
    errors and I/O failures become CommandError with exit code 1.
    """

    stealth_options = ("stdin",)

    def handle(self, *args, **options):
        level = _VERBOSITY_LEVELS.get(options.get("verbosity", 1))
        if level is not None:
            logging.getLogger("core").setLevel(level)
        self.stdin = options.get("stdin") or sys.stdin
        try:
            return self.run(*args, **options)
        except (CfdgError, OSError) as exc:
            logger.error(f"{self.command_name()}: {exc}")
            raise CommandError(str(exc), returncode=EXIT_ERROR) from exc

    def run(self, *args, **options):
        raise NotImplementedError

    def command_name(self) -> str:
        return self.__class__.__module__.rsplit(".", 1)[-1]

    def read_input(self, path: str) -> str:
        if path == "-":
            return self.stdin.read()
        return Path(path).read_text(encoding="utf-8")

    def write_output(self, path, text: str) -> None:
        if path in (None, "-"):
            self.stdout.write(text, ending="" if text.endswith("\n") else "\n")
            return
        Path(path).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")


def add_output_argument(parser):
    parser.add_argument(
        "-o",
        "--output",
        help="Write to this file instead of standard output",
    )


def add_dialect_argument(parser):
    parser.add_argument(
        "--dialect",
        choices=[d.value for d in Dialect],
        default=None,
        help="Dot flavor of the input (auto-detected when omitted)",
    )


def add_semantics_arguments(parser):
    parser.add_argument(
        "--semantics",
        choices=[s.value for s in IndependenceSemantics],
        default=None,
        help="How other conditions must agree in an independence pair (default from settings)",
    )
    parser.add_argument(
        "--loop-mode",
        choices=[m.value for m in LoopMode],
        default=None,
        help="Observe decisions per traversal or per run (default from settings)",
    )


def add_criterion_argument(parser, allow_all=False, default="mcdc"):
    choices = [c.value for c in Criterion] + (["all"] if allow_all else [])
    parser.add_argument(
        "--criterion",
        choices=choices,
        default=default,
        help="Coverage criterion to evaluate",
    )


def add_format_argument(parser):
    parser.add_argument(
        "--format",
        choices=["text", "json"],
        default="text",
        help="Report format",
    )


def resolve_dialect(options):
    value = options.get("dialect") or cfdg_setting("DEFAULT_DIALECT")
    return Dialect(value) if value else None


def resolve_semantics(options) -> IndependenceSemantics:
    return IndependenceSemantics(options.get("semantics") or cfdg_setting("DEFAULT_SEMANTICS") or "masking")


def resolve_loop_mode(options) -> LoopMode:
    return LoopMode(options.get("loop_mode") or cfdg_setting("DEFAULT_LOOP_MODE") or "traversal")


def limit(key: str, fallback: int) -> int:
    value = cfdg_setting(key)
    return int(value) if value is not None else fallback
