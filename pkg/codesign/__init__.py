#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# __init__.py
#
#   codesign root module.
#   Version for setuptools is changed here
#
#######################################################################
import os

VERSION = "0.1"

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
