#!/usr/bin/env python3

# Test endpoint: writes a truncated response line.

import sys

sys.stdin.readline()
sys.stdout.write('{"v": 1, "status": "ok", "qor": \n')
