#!/usr/bin/env python3

# Test endpoint: reports an error through the protocol.

import json
import sys

sys.stdin.readline()
sys.stdout.write(json.dumps({"v": 1, "status": "error", "message": "dataset missing"}) + "\n")
