from .meta import (
    AlphaTrace,
    RegConfig,
    RegValue,
    alpha_gradient,
    regularizer_value,
    sign,
    temporal_gradient,
)

__all__ = [
    "AlphaTrace",
    "RegConfig",
    "RegValue",
    "alpha_gradient",
    "regularizer_value",
    "sign",
    "temporal_gradient",
]
