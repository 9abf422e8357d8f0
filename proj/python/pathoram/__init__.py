"""Path ORAM: oblivious block storage over an untrusted bucket tree.

The heavy lifting lives in the `_pathoram` extension module; this package
re-exports its public surface.
"""

try:
    from ._pathoram import (
        IntegrityError,
        Oram,
        PathOramError,
        PreconditionError,
        TransportError,
        path_indices,
        record_size,
    )
except ImportError:  # running against a build tree, module not packaged yet
    from _pathoram import (
        IntegrityError,
        Oram,
        PathOramError,
        PreconditionError,
        TransportError,
        path_indices,
        record_size,
    )

__all__ = [
    "Oram",
    "path_indices",
    "record_size",
    "PathOramError",
    "PreconditionError",
    "IntegrityError",
    "TransportError",
]

__version__ = "0.1.0"
