"""
Atomic output files.

Every report codesign writes goes through AtomicOutputFile: the content is written to a
named temporary file in the destination directory and renamed over the destination only
when the with-block exits cleanly. A crash or exception leaves the previous file (or no
file) in place, never a half-written one. The rename stays on one filesystem because the
temporary file lives next to its destination.
"""

import os
from tempfile import NamedTemporaryFile


class AtomicOutputFile:
    def __init__(self, path, mode="w", encoding="utf-8"):
        self.path = path
        self.committed = False
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        self.named_temporary_file = NamedTemporaryFile(
            mode=mode,
            encoding=encoding if "b" not in mode else None,
            dir=directory,
            prefix="." + os.path.basename(path) + ".",
            suffix=".tmp",
            delete=False,
        )
        self.name = self.named_temporary_file.name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        if exc_type is None:
            self.commit()
        else:
            self.discard()
        return False

    def __del__(self):
        if "named_temporary_file" in self.__dict__ and not self.committed:
            self.discard()

    def __getattr__(self, name):
        return getattr(self.named_temporary_file, name)

    def commit(self):
        self.named_temporary_file.flush()
        os.fsync(self.named_temporary_file.fileno())
        self.named_temporary_file.close()
        os.replace(self.name, self.path)
        self.committed = True

    def discard(self):
        self.named_temporary_file.close()
        try:
            os.unlink(self.name)
        except FileNotFoundError:
            pass  # discarding twice is not an error
