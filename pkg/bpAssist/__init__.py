# bpAssist/__init__.py

__version__ = "0.1.0"

# allows `import bpAssist; bpAssist.cli`
from .cli import cli

__all__ = ["cli", "__version__"]
