import sys

from meltline.cli import main

sys.exit(main())
