#!/usr/bin/env python3
import os
import re
import sys

# run the waldo CLI from a clone without installing it first
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), "src", "waldo"))

from src.waldo.__main__ import main

if __name__ == "__main__":
    # strip the suffixes pip adds to console scripts on some platforms
    sys.argv[0] = re.sub(r"(-script\.pyw|\.exe)?$", "", sys.argv[0])
    sys.exit(main())
