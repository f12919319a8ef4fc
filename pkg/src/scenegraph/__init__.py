__version__ = "0.1.0"

from . import services  # noqa: E402,F401
