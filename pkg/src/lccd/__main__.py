import sys

from lccd.cli import main

sys.exit(main())
