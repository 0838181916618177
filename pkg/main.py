"""Entry point for ChromaChords."""
import sys

from src.chromachords.cli import main


if __name__ == "__main__":
    sys.exit(main())
