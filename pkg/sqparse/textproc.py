"""
WordPiece tokenization of questions with a piece-to-word alignment.
"""
import io
import logging
import unicodedata

import numpy as np

from .exceptions import ContractError, FormatError
from .utils import atomic_open


logger = logging.getLogger(__name__)

CLS = '[CLS]'
SEP = '[SEP]'
MASK = '[MASK]'
PAD = '[PAD]'
UNK = '[UNK]'
SPECIAL_TOKENS = (PAD, UNK, CLS, SEP, MASK)

# word_index value of [CLS], [SEP] and other special pieces
NO_WORD = -1

DEFAULT_PREFIX = '##'
MAX_LENGTH = 64
MAX_CHARS_PER_WORD = 100


def _is_punctuation(char):
    cp = ord(char)
    # All non-letter/number ASCII counts as punctuation, like in BERT.
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(char).startswith('P')


def _strip_accents(text):
    text = unicodedata.normalize('NFD', text)
    return ''.join(c for c in text if unicodedata.category(c) != 'Mn')


def split_words(text):
    """
    Lowercase, strip accents, split on Unicode whitespace and split every
    punctuation character into a word of its own.
    """
    words = []
    for token in _strip_accents(text.lower()).split():
        current = []
        for char in token:
            if _is_punctuation(char):
                if current:
                    words.append(''.join(current))
                    current = []
                words.append(char)
            else:
                current.append(char)
        if current:
            words.append(''.join(current))
    return words


class Vocabulary(object):

    def __init__(self, tokens, prefix=DEFAULT_PREFIX):
        self.tokens = list(tokens)
        self.prefix = prefix
        self.token_to_id = {}
        for i, token in enumerate(self.tokens):
            if token in self.token_to_id:
                raise FormatError('duplicate vocabulary token %r' % token)
            self.token_to_id[token] = i
        missing = [t for t in SPECIAL_TOKENS if t not in self.token_to_id]
        if missing:
            raise FormatError('vocabulary lacks special tokens %s'
                              % ', '.join(missing))

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.token_to_id

    def __getitem__(self, token):
        return self.token_to_id[token]

    @property
    def special_ids(self):
        return frozenset(self.token_to_id[t] for t in SPECIAL_TOKENS)

    def save(self, path):
        with atomic_open(path) as f:
            f.write(u'#prefix=%s\n' % self.prefix)
            for token in self.tokens:
                f.write(token + u'\n')


def load_vocab(path):
    """
    One token per line, line number = id. An optional first line
    ``#prefix=<str>`` sets the continuation prefix.
    """
    prefix = DEFAULT_PREFIX
    tokens = []
    with io.open(path, 'r', encoding='utf-8', newline='\n') as f:
        for lineno, line in enumerate(f, 1):
            token = line.rstrip('\n').rstrip('\r')
            if lineno == 1 and token.startswith('#prefix='):
                prefix = token[len('#prefix='):]
                continue
            if not token:
                raise FormatError('empty vocabulary token', path, lineno)
            tokens.append(token)
    return Vocabulary(tokens, prefix)


class TokenizedQuestion(object):

    def __init__(self, words, pieces, piece_ids, word_index, truncated=False):
        self.words = words
        self.pieces = pieces
        self.piece_ids = np.asarray(piece_ids, dtype=np.int64)
        self.word_index = np.asarray(word_index, dtype=np.int64)
        self.truncated = truncated

    def __len__(self):
        return len(self.pieces)

    def __repr__(self):
        return '<TokenizedQuestion %s>' % ' '.join(self.pieces)

    @property
    def content_positions(self):
        """Positions of the pieces that belong to a word."""
        return np.flatnonzero(self.word_index != NO_WORD)

    def span_text(self, start_word, end_word):
        return ' '.join(self.words[start_word:end_word + 1])


def wordpiece(word, vocab):
    """
    Greedy longest-match-first segmentation of one word. Returns [UNK] when
    some remainder of the word has no matching vocabulary entry.
    """
    if len(word) > MAX_CHARS_PER_WORD:
        return [UNK]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            candidate = word[start:end]
            if start > 0:
                candidate = vocab.prefix + candidate
            if candidate in vocab:
                match = candidate
                break
            end -= 1
        if match is None:
            return [UNK]
        pieces.append(match)
        start = end
    return pieces


def tokenize(question, vocab, max_length=MAX_LENGTH):
    words = split_words(question)
    if not words:
        raise ContractError('empty question')
    if max_length < 3:
        raise ContractError('max_length %d leaves no room for a word piece'
                            % max_length)

    pieces = [CLS]
    word_index = [NO_WORD]
    kept = []
    truncated = False
    for i, word in enumerate(words):
        word_pieces = wordpiece(word, vocab)
        room = max_length - 1 - len(pieces)
        if len(word_pieces) > room:
            truncated = True
            # a word cut short keeps the pieces that fit
            word_pieces = word_pieces[:room]
        if word_pieces:
            kept.append(word)
            pieces.extend(word_pieces)
            word_index.extend([i] * len(word_pieces))
        if truncated:
            break
    pieces.append(SEP)
    word_index.append(NO_WORD)

    if truncated:
        logger.warning('question truncated to %d of %d words: %r',
                       len(kept), len(words), question)
    return TokenizedQuestion(kept, pieces, [vocab[p] for p in pieces],
                             word_index, truncated)


def word_boundaries(tq):
    """
    Inclusive (first_piece, last_piece) per word, in word order.
    """
    bounds = []
    for position, word in enumerate(tq.word_index):
        if word == NO_WORD:
            continue
        if word == len(bounds):
            bounds.append([position, position])
        else:
            bounds[word][1] = position
    return [tuple(b) for b in bounds]


def mask_span(tq, start_word, end_word, vocab):
    """
    Copy of ``tq`` with the words start_word..end_word replaced by a single
    [MASK] word.
    """
    bounds = word_boundaries(tq)
    first, last = bounds[start_word][0], bounds[end_word][1]
    removed = end_word - start_word
    word_index = [w - removed if w > end_word else w
                  for w in tq.word_index[last + 1:]]
    words = tq.words[:start_word] + [MASK] + tq.words[end_word + 1:]
    pieces = tq.pieces[:first] + [MASK] + tq.pieces[last + 1:]
    word_index = list(tq.word_index[:first]) + [start_word] + word_index
    return TokenizedQuestion(words, pieces, [vocab[p] for p in pieces],
                             word_index, tq.truncated)


def span_piece_mask(tq, start_word, end_word):
    """
    Attention mask (True = may be attended to) hiding the pieces of the
    words start_word..end_word.
    """
    mask = np.ones(len(tq), dtype=bool)
    inside = (tq.word_index >= start_word) & (tq.word_index <= end_word)
    mask[inside] = False
    return mask
