"""
Pseudolap: Main Entry Point.
Parses the command line and dispatches to the subcommands in src.cli.
"""
import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import Config
from src.logger import setup_logger
from src.cli import PROG, main as cli_main

logger = setup_logger()


def main(argv=None):
    try:
        Config.validate()
    except ValueError as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 2
    try:
        return cli_main(argv)
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 130
    except Exception as e:
        logger.exception(f"Critical error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
