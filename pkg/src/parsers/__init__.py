"""__init__.py para parsers."""

from .cifar_parser import CifarBinaryParser, load_cifar10

__all__ = [
    "CifarBinaryParser",
    "load_cifar10",
]
