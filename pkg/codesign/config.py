#!/usr/bin/env python3
# -*- coding: utf-8 -*-

#######################################################################
#
# config.py
#
#   Loading and validating the JSON inputs and outputs against the
#   schemas shipped in codesign/data/schema.
#
#######################################################################

import json
import os
from collections import OrderedDict
from functools import lru_cache

import jsonschema

from codesign import DATA_DIR
from codesign.exceptions import ConfigError, SchemaError
from codesign.log import LOGGER

SCHEMA_DIR = os.path.join(DATA_DIR, "schema")


def data_path(*parts):
    """ Path of a file shipped in codesign/data """
    return os.path.join(DATA_DIR, *parts)


@lru_cache(maxsize=None)
def load_schema(name):
    """ Load schema NAME (e.g. "network") from codesign/data/schema/NAME.v1.json """
    path = os.path.join(SCHEMA_DIR, f"{name}.v1.json")
    with open(path, "r", encoding="utf-8") as fin:
        schema = json.load(fin)
    jsonschema.Draft7Validator.check_schema(schema)
    return schema


def json_pointer(error_path):
    return "/" + "/".join(str(p) for p in error_path) if error_path else "/"


def validate(document, schema_name, path=None):
    """ Validate DOCUMENT against schema SCHEMA_NAME

    Raises
    ------
    SchemaError
        for the most relevant violation, with the JSON pointer of the offending value
    """
    validator = jsonschema.Draft7Validator(load_schema(schema_name))
    error = jsonschema.exceptions.best_match(validator.iter_errors(document))
    if error is not None:
        raise SchemaError(error.message, json_pointer(error.absolute_path), path=path)
    return document


def parse_json_text(text, path="<string>"):
    try:
        return json.loads(text, object_pairs_hook=OrderedDict)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, path=path, line=e.lineno, column=e.colno)


def load_config(path, schema_name=None):
    """ Read the JSON file at PATH, validating it when SCHEMA_NAME is given

    Parameters
    ----------
    path : str
        file to read
    schema_name : str
        one of the schema names in codesign/data/schema, or None to skip validation

    Returns
    -------
    OrderedDict
        the parsed document, keys in file order
    """
    try:
        with open(path, "r", encoding="utf-8") as fin:
            text = fin.read()
    except OSError as e:
        raise ConfigError(f"cannot read file ({e.strerror})", path=path)
    document = parse_json_text(text, path=path)
    if schema_name is not None:
        validate(document, schema_name, path=path)
    LOGGER.debug(f"Loaded {path}")
    return document


def resolve_relative(base_file, ref):
    """ Resolve a path written inside BASE_FILE relative to that file's directory """
    if os.path.isabs(ref):
        return ref
    return os.path.join(os.path.dirname(os.path.abspath(base_file)), ref)
