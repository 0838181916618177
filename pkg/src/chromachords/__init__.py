"""ChromaChords - chroma-histogram melody harmonization."""

__version__ = "1.0.0"
