"""__init__.py para presenters."""

from .console_presenter import ConsolePresenter

__all__ = [
    "ConsolePresenter",
]
