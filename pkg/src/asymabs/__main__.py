import sys
from asymabs.cli import main

sys.exit(main())
