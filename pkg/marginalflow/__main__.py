import sys

from marginalflow.cli import main

sys.exit(main())
