import sys

from patrev.cli import main

sys.exit(main())
