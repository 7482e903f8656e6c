import sys

from robsub.cli import main

sys.exit(main())
