#!/usr/bin/env python3

# Test endpoint: fails with a message on stderr.

import sys

sys.stdin.readline()
sys.stderr.write("out of GPU memory\n")
sys.exit(3)
