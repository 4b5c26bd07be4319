"""
Binary tensor archive shared by model weights and optimizer state.

    magic "KGQA" | version u32 | tensor count u64
    per tensor: name length u32 | UTF-8 name | rank u32 | dims u64 * rank
                | float32 payload, row-major

All integers and floats are little-endian.
"""
import collections
import struct

import numpy as np

from .exceptions import ArchiveError
from .utils import atomic_open


MAGIC = b'KGQA'
VERSION = 1


def write_archive(path, tensors):
    with atomic_open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(struct.pack('<IQ', VERSION, len(tensors)))
        for name, value in tensors.items():
            value = np.ascontiguousarray(value, dtype='<f4')
            encoded = name.encode('utf-8')
            f.write(struct.pack('<I', len(encoded)))
            f.write(encoded)
            f.write(struct.pack('<I', value.ndim))
            f.write(struct.pack('<%dQ' % value.ndim, *value.shape))
            f.write(value.tobytes(order='C'))


class _Reader(object):

    def __init__(self, data):
        self.data = data
        self.offset = 0

    def take(self, size, what):
        if self.offset + size > len(self.data):
            raise ArchiveError('truncated archive while reading %s' % what)
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_archive(path):
    with open(path, 'rb') as f:
        reader = _Reader(f.read())
    if reader.take(len(MAGIC), 'magic') != MAGIC:
        raise ArchiveError('%s is not a tensor archive (bad magic)' % path)
    version, count = reader.unpack('<IQ', 'header')
    if version != VERSION:
        raise ArchiveError('unsupported archive version %d' % version)

    tensors = collections.OrderedDict()
    for _ in range(count):
        (length,) = reader.unpack('<I', 'tensor name')
        name = reader.take(length, 'tensor name').decode('utf-8')
        (rank,) = reader.unpack('<I', name)
        shape = reader.unpack('<%dQ' % rank, name)
        size = int(np.prod(shape)) if rank else 1
        payload = reader.take(4 * size, name)
        tensors[name] = np.frombuffer(payload, dtype='<f4').reshape(
            shape).astype(np.float32)
    if reader.offset != len(reader.data):
        raise ArchiveError('trailing bytes after %d tensors' % count)
    return tensors
