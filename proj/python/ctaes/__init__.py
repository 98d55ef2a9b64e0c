"""Cross-topic automated essay scoring: python bindings for the C++ core."""

try:
    # wheel layout: extension module installed inside the package
    from ._ctaes import (  # noqa: F401
        FEATURE_DIM,
        NUM_GRADES,
        NUM_TRAITS,
        MemoryBank,
        denormalize_score,
        extract_features,
        feature_schema_json,
        normalize_score,
        qwk,
        score_to_class,
        sharpen,
        __version__,
    )
except ImportError:  # in-tree layout: module on PYTHONPATH next to the build
    from _ctaes import (  # noqa: F401
        FEATURE_DIM,
        NUM_GRADES,
        NUM_TRAITS,
        MemoryBank,
        denormalize_score,
        extract_features,
        feature_schema_json,
        normalize_score,
        qwk,
        score_to_class,
        sharpen,
        __version__,
    )

__all__ = [
    "FEATURE_DIM",
    "NUM_GRADES",
    "NUM_TRAITS",
    "MemoryBank",
    "denormalize_score",
    "extract_features",
    "feature_schema_json",
    "normalize_score",
    "qwk",
    "score_to_class",
    "sharpen",
    "__version__",
]
