"""__init__.py para src."""

from .models import *
from .exceptions import *
from .config import *

__version__ = "0.3.0"
