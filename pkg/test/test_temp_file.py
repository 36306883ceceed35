#!/usr/bin/env python3

"""
Test AtomicOutputFile class
"""

import os
import tempfile
import unittest

from codesign.log import LOGGER
from codesign.tempfile import AtomicOutputFile


class TestTempFile(unittest.TestCase):
    def setUp(self):
        self.tempdirobj = tempfile.TemporaryDirectory(prefix="tmpdir_test_temp_file_", dir=".")
        self.tempdir = self.tempdirobj.name
        self.path = os.path.join(self.tempdir, "report.json")

    def tearDown(self):
        self.tempdirobj.cleanup()

    def read(self):
        with open(self.path, mode="r", encoding="utf-8") as readf:
            return readf.read()

    def testTypicalUsage(self):
        with AtomicOutputFile(self.path) as tf:
            tf.write("Some text")
            self.assertFalse(os.path.exists(self.path))
            self.assertTrue(os.path.exists(tf.name))
        self.assertEqual(self.read(), "Some text")
        self.assertEqual(os.listdir(self.tempdir), ["report.json"])

    def testReplacesExisting(self):
        with AtomicOutputFile(self.path) as tf:
            tf.write("old")
        with AtomicOutputFile(self.path) as tf:
            tf.write("new")
        self.assertEqual(self.read(), "new")

    def testErrorKeepsPrevious(self):
        with AtomicOutputFile(self.path) as tf:
            tf.write("Some text")
        with self.assertRaises(ValueError):
            with AtomicOutputFile(self.path) as tf:
                tf.write("half")
                raise ValueError("interrupted")
        self.assertEqual(self.read(), "Some text")
        self.assertEqual(os.listdir(self.tempdir), ["report.json"])

    def testDiscard(self):
        tf = AtomicOutputFile(self.path)
        tf.write("never kept")
        tf.discard()
        tf.discard()
        self.assertEqual(os.listdir(self.tempdir), [])

    def testCreatesDirectories(self):
        nested = os.path.join(self.tempdir, "designs", "best.json")
        with AtomicOutputFile(nested) as tf:
            tf.write("{}")
        self.assertTrue(os.path.isfile(nested))

    def testBinary(self):
        with AtomicOutputFile(self.path, mode="wb") as tf:
            tf.write(b"\x00\x01")
        with open(self.path, "rb") as readf:
            self.assertEqual(readf.read(), b"\x00\x01")


if __name__ == "__main__":
    LOGGER.setLevel("DEBUG")
    unittest.main()
