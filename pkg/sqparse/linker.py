"""
Entity candidate generation: an inverted index from name words to entities,
fuzzy string similarity against the predicted span and degree-based
ordering of the retrieved entities.
"""
import heapq
import logging
import struct

import Levenshtein

from .exceptions import ArchiveError, ContractError
from .nodes import Candidate
from .textproc import split_words
from .utils import atomic_open


logger = logging.getLogger(__name__)

STOP_WORDS = ('the', 'of', 'a', 'in')
DEFAULT_LIMIT = 50

MAGIC = b'KGIX'
VERSION = 1


class InvertedIndex(object):

    def __init__(self, entries=None):
        self.entries = dict(entries or {})

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word in self.entries

    def __getitem__(self, word):
        return self.entries.get(word, frozenset())

    def __eq__(self, other):
        return isinstance(other, InvertedIndex) and \
            self.entries == other.entries

    def __ne__(self, other):
        return not self == other

    __hash__ = None

    def add(self, word, entity):
        entities = self.entries.get(word)
        if entities is None:
            entities = self.entries[word] = set()
        entities.add(entity)


def build_index(graph):
    index = InvertedIndex()
    for record in graph.records.values():
        for name in record.names:
            for word in split_words(name):
                index.add(word, record.id)
    index.entries = dict((word, frozenset(entities))
                         for word, entities in index.entries.items())
    logger.info('indexed %d words over %d entities', len(index),
                len(graph.records))
    return index


def _ratio(a, b):
    longest = max(len(a), len(b))
    if not longest:
        return 1.0
    return 1.0 - Levenshtein.distance(a, b) / float(longest)


def _sorted_tokens(text):
    return ' '.join(sorted(text.split()))


def score_similarity(a, b):
    """
    The larger of the normalized edit-distance similarity of the lowercased
    strings and of their whitespace tokens sorted alphabetically.
    """
    a, b = a.lower(), b.lower()
    if not a or not b:
        return 1.0 if a == b else 0.0
    return max(_ratio(a, b), _ratio(_sorted_tokens(a), _sorted_tokens(b)))


def candidate_pool(span_text, index, stop_words=STOP_WORDS):
    words = split_words(span_text)
    content = [w for w in words if w not in stop_words] or words
    pool = set()
    for word in content:
        pool |= index[word]
    return pool


def score_entity(span_text, record):
    best_name, best = None, -1.0
    for name in record.names:
        similarity = score_similarity(span_text, name)
        if similarity > best:
            best_name, best = name, similarity
    return best_name, best


def generate_candidates(span_text, index, graph, limit=DEFAULT_LIMIT,
                        stop_words=STOP_WORDS):
    """
    Entities sharing a (non stop-) word with the span, best first by
    similarity, then out-degree, then id; at most ``limit`` of them.
    """
    if limit < 1:
        raise ContractError('candidate limit %d < 1' % limit)
    candidates = []
    for entity in candidate_pool(span_text, index, stop_words):
        record = graph.entity(entity)
        if record is None:
            continue
        name, similarity = score_entity(span_text, record)
        candidates.append(Candidate({
            'entity': entity, 'name': name, 'similarity': similarity,
            'out_degree': record.out_degree, 'in_degree': record.in_degree}))
    return heapq.nsmallest(limit, candidates, key=Candidate.sort_key)


def _entity_of(candidate):
    return getattr(candidate, 'entity', candidate)


def recall_at(predictions, golds, n):
    """
    Fraction of examples whose gold entity is among the first ``n``
    candidates.
    """
    if n < 1:
        raise ContractError('R@%d is undefined' % n)
    if len(predictions) != len(golds):
        raise ContractError('%d candidate lists for %d gold entities'
                            % (len(predictions), len(golds)))
    if not golds:
        return 0.0
    hits = sum(1 for candidates, gold in zip(predictions, golds)
               if gold in [_entity_of(c) for c in candidates[:n]])
    return hits / float(len(golds))


def _pack_text(text):
    encoded = text.encode('utf-8')
    return struct.pack('<I', len(encoded)) + encoded


def save_index(index, path):
    with atomic_open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(struct.pack('<IQ', VERSION, len(index.entries)))
        for word in sorted(index.entries):
            entities = sorted(index.entries[word])
            f.write(_pack_text(word))
            f.write(struct.pack('<I', len(entities)))
            for entity in entities:
                f.write(_pack_text(entity))


def load_index(path):
    with open(path, 'rb') as f:
        data = f.read()
    offset = [0]

    def take(size):
        if offset[0] + size > len(data):
            raise ArchiveError('truncated index snapshot %s' % path)
        chunk = data[offset[0]:offset[0] + size]
        offset[0] += size
        return chunk

    def text():
        (length,) = struct.unpack('<I', take(4))
        return take(length).decode('utf-8')

    if take(len(MAGIC)) != MAGIC:
        raise ArchiveError('%s is not an index snapshot (bad magic)' % path)
    version, count = struct.unpack('<IQ', take(12))
    if version != VERSION:
        raise ArchiveError('unsupported index version %d' % version)
    entries = {}
    for _ in range(count):
        word = text()
        (size,) = struct.unpack('<I', take(4))
        entries[word] = frozenset(text() for _ in range(size))
    return InvertedIndex(entries)
