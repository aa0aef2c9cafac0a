import sys

from hedger.cli import main

sys.exit(main())
