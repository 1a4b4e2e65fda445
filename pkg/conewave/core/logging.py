import logging
from typing import Any, Dict, Optional

_run: Dict[str, str] = {}


def bind_run(command: Optional[str] = None, config_hash: Optional[str] = None) -> None:
    """Tag every record that reaches our handler with the command and its config hash.

    Called without arguments it clears the tags.
    """
    _run.clear()
    if command:
        _run["command"] = command
    if config_hash:
        _run["config_hash"] = config_hash


class RunContextFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        for key, value in _run.items():
            if not hasattr(record, key):
                setattr(record, key, value)
        return True


class CustomFormatter(logging.Formatter):
    def format(self, record: Any) -> str:
        tag = " ".join(v for v in (getattr(record, "command", None), getattr(record, "config_hash", None)) if v)
        record.run_str = f'[{tag}]' if tag else ''
        return super().format(record)


def setup_logging(level: str = "INFO") -> None:
    formatter = CustomFormatter(
        '%(asctime)s %(run_str)s %(levelname)s %(name)s: %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    logger = logging.getLogger()
    # the CLI may run twice in one process
    for handler in list(logger.handlers):
        if isinstance(handler.formatter, CustomFormatter):
            logger.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(formatter)
    handler.addFilter(RunContextFilter())
    logger.addHandler(handler)
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
