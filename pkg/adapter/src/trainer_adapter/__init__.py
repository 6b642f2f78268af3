"""Reference external trainer speaking the newline-delimited JSON protocol.

The package ships two modes. Stub mode answers every training request from a
recorded lookup table, so protocol conformance can be tested without any ML
dependency installed. Fine-tune mode is a documented extension point where a
real trainer plugs in; see finetune.py.
"""

from .config import AdapterConfig, AdapterError
from .serve import serve
from .table import StubTable

__version__ = "0.1.0"

__all__ = ["AdapterConfig", "AdapterError", "StubTable", "serve", "__version__"]
