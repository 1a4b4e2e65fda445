import sys

from conewave.cli import main
from conewave.core.config import settings
from conewave.core.logging import setup_logging

if __name__ == "__main__":
    setup_logging(settings.LOG_LEVEL)
    sys.exit(main())
