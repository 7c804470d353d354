import logging
import sys

_ROOT = "ezbranch"
_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def get_logger(name: str) -> logging.Logger:
    r"""Return a logger living under the ``ezbranch`` namespace.

    Parameters
    ----------
    name : str
        Usually ``__name__`` of the calling module. Names outside the
        package namespace are re-rooted under ``ezbranch``.

    Returns
    -------
    logging.Logger
    """
    if name != _ROOT and not name.startswith(_ROOT + "."):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)


def configure_logging(level: int | str = logging.WARNING) -> logging.Logger:
    r"""Attach a single stderr handler to the package root logger.

    Calling it again only updates the level. Standard output is never used
    so that command output stays a pure function of the run configuration.

    Parameters
    ----------
    level : int | str, default to ``logging.WARNING``
        Level name (``"DEBUG"``, ``"INFO"``, ...) or numeric level.

    Returns
    -------
    logging.Logger
        The configured package root logger.
    """
    root = logging.getLogger(_ROOT)
    if isinstance(level, str):
        level = level.upper()
    root.setLevel(level)

    if not any(getattr(h, "_ezbranch", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_FORMAT))
        handler._ezbranch = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.propagate = False
    return root
