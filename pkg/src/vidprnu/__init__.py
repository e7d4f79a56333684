"""Source camera attribution for videos: compression-aware sensor fingerprints,
scene-suppressing enhancement, and open-set clustering by device."""

__version__ = "0.1.0"

from .errors import DataError, VidPrnuError

__all__ = ["DataError", "VidPrnuError", "__version__"]
