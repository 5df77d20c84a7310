"""Well-splitting AiiDA plugin and numerical library."""

from importlib.metadata import version

__version__ = version("aiida-wellsplit")
