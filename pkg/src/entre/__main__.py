import sys

from entre.cli import main

sys.exit(main())
