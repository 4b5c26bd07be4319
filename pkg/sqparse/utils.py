import contextlib
import io
import math
import os
import tempfile
import zlib

import numpy as np

from .exceptions import FormatError


def round_half_up(value):
    return int(math.floor(value + 0.5))


def random_stream(seed, name):
    """
    Independent generator for one named consumer of the run seed
    ('data', 'init', 'shuffle', ...).
    """
    entropy = [int(seed), zlib.crc32(name.encode('utf-8')) & 0xffffffff]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def read_tsv(path, columns):
    """
    Yield (lineno, fields) for every non-empty line of a tab-separated file.
    """
    with io.open(path, 'r', encoding='utf-8', newline='\n') as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip('\n').rstrip('\r')
            if not line:
                continue
            fields = line.split('\t')
            if len(fields) != columns:
                raise FormatError('expected %d tab-separated columns, got %d'
                                  % (columns, len(fields)), path, lineno)
            yield lineno, fields


@contextlib.contextmanager
def atomic_open(path, mode='w'):
    """
    Write to a temporary file next to ``path`` and rename it into place once
    the block finishes without an exception.
    """
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        os.makedirs(directory)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        if 'b' in mode:
            f = os.fdopen(fd, mode)
        else:
            f = io.open(fd, mode, encoding='utf-8', newline='\n')
        with f:
            yield f
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
