"""Allow ``python -m fullmed``."""

from fullmed.cli import main

if __name__ == "__main__":
    main()
