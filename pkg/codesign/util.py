#!/usr/bin/env python3
# -*- coding: utf-8 -*-

###########################################
#
# util.py
#
# Shared file and number helpers
#
############################################

import hashlib
import json
import os
from collections import OrderedDict
from fractions import Fraction
from io import open

from codesign.tempfile import AtomicOutputFile


def ensure_dirs(path):
    dirname = os.path.dirname(path)
    if dirname and not os.path.exists(dirname):
        os.makedirs(dirname)


def load_txt(input_path):
    with open(input_path, "r", encoding="utf-8") as fin:
        return fin.read()


def save_txt(output_path, txt):
    ensure_dirs(output_path)
    with AtomicOutputFile(output_path) as fout:
        fout.write(txt)


def dump_json(obj):
    """ The one JSON text layout used for every report file """
    return json.dumps(obj, ensure_ascii=False, indent=4) + "\n"


def save_json(output_path, obj):
    save_txt(output_path, dump_json(obj))


def save_jsonl(output_path, records):
    """ Write one compact JSON document per line """
    save_txt(
        output_path,
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
    )


def append_jsonl(output_path, record):
    ensure_dirs(output_path)
    with open(output_path, "a", encoding="utf-8") as fout:
        fout.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_jsonl(input_path):
    records = []
    with open(input_path, "r", encoding="utf-8") as fin:
        for line in fin:
            if line.strip():
                records.append(json.loads(line, object_pairs_hook=OrderedDict))
    return records


def canonical_json(obj):
    """ Key-sorted, whitespace-free JSON used for hashing """
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fin:
        for chunk in iter(lambda: fin.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def to_fraction(value):
    """ Exact rational from an int, a float literal or a "p/q" string """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # go through the decimal text so 0.89 stays 89/100
        return Fraction(repr(value))
    return Fraction(value)


def fraction_to_json(value):
    """ Integers and short decimals as numbers, anything else as "p/q" """
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    as_float = float(value)
    if Fraction(repr(as_float)) == value:
        return as_float
    return f"{value.numerator}/{value.denominator}"


def ceil_div(a, b):
    return -(-a // b)
