"""
Deterministic synthetic corpus: a small knowledge graph with made-up entity
names, one verb per relation, and template questions over its triples.
"""
import itertools
import logging
import os

from .exceptions import ConfigError
from .kgstore import QAExample, Triple, derive_span, write_dataset, \
    write_lexicon, write_triples
from .textproc import SPECIAL_TOKENS, Vocabulary, split_words
from .utils import random_stream


logger = logging.getLogger(__name__)

# entity names and verbs are built from disjoint syllable sets, so no name
# word can be read as a verb or as a template word
NAME_SYLLABLES = tuple(c + v for c in 'hklnrstv' for v in 'aeiou')
VERB_SYLLABLES = tuple(c + v for c in 'bdfgpz' for v in 'aeiou')

TEMPLATES = (
    'who {verb} {entity} ?',
    'what {verb} {entity} ?',
    'which one {verb} {entity} ?',
    'tell me what {verb} {entity}',
)
TEMPLATE_WORDS = ('who', 'what', 'which', 'one', 'tell', 'me', '?')

ALIAS_RATE = 0.1
LITERAL_EVERY = 5
BACKGROUND_TRIPLES = (1, 4)

FILES = {
    'triples': 'triples.txt',
    'lexicon': 'lexicon.txt',
    'vocab': 'vocab.txt',
    'train': 'train.txt',
    'dev': 'valid.txt',
    'test': 'test.txt',
}


def _verbs(count):
    verbs = []
    for length in itertools.count(2):
        for combo in itertools.product(VERB_SYLLABLES, repeat=length):
            verbs.append(''.join(combo) + 's')
            if len(verbs) == count:
                return verbs


def _name_word(rng):
    return ''.join(rng.choice(NAME_SYLLABLES, size=rng.integers(2, 4)))


def _names(rng, count):
    names = []
    seen = set()
    while len(names) < count:
        name = ' '.join(_name_word(rng) for _ in range(rng.integers(1, 3)))
        if name not in seen:
            seen.add(name)
            names.append(name)
    return names


class ToyCorpus(object):

    def __init__(self, triples, lexicon, vocab, relations, verbs, train, dev,
                 test):
        self.triples = triples
        self.lexicon = lexicon
        self.vocab = vocab
        self.relations = relations
        self.verbs = verbs
        self.train = train
        self.dev = dev
        self.test = test

    def write(self, out_dir):
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)

        def path(key):
            return os.path.join(out_dir, FILES[key])

        write_triples(self.triples, path('triples'))
        write_lexicon(self.lexicon, path('lexicon'))
        self.vocab.save(path('vocab'))
        write_dataset(self.train, path('train'))
        write_dataset(self.dev, path('dev'))
        write_dataset(self.test, path('test'))
        logger.info('wrote %d triples and %d/%d/%d questions to %s',
                    len(self.triples), len(self.train), len(self.dev),
                    len(self.test), out_dir)


def toy_vocabulary(verbs):
    tokens = list(SPECIAL_TOKENS) + list(TEMPLATE_WORDS) + list(verbs)
    tokens += list(NAME_SYLLABLES)
    tokens += ['##' + s for s in NAME_SYLLABLES]
    return Vocabulary(tokens)


def generate_corpus(seed, n_entities, n_relations, n_questions):
    """
    Relations are drawn with Zipfian weights; every question mentions a full
    name (or alias) of its subject, so every example is solvable. Dev and
    test hold n_questions // 5 questions each.
    """
    for name, value in (('n_entities', n_entities),
                        ('n_relations', n_relations),
                        ('n_questions', n_questions)):
        if value < 1:
            raise ConfigError('must be >= 1, got %d' % value, name)
    rng = random_stream(seed, 'data')

    entities = ['m.%05d' % i for i in range(n_entities)]
    verbs = _verbs(n_relations)
    relations = ['toy/%s' % verb for verb in verbs]
    literal = set(relations[LITERAL_EVERY - 1::LITERAL_EVERY])

    names = _names(rng, n_entities + n_entities // 2)
    lexicon = list(zip(entities, names))
    aliases = {}
    spare = iter(names[n_entities:])
    for entity in entities:
        if rng.random() < ALIAS_RATE:
            alias = next(spare, None)
            if alias is None:
                break
            aliases[entity] = alias
            lexicon.append((entity, alias))
    primary = dict(zip(entities, names))

    weights = 1.0 / (1.0 + rng.permutation(n_relations))
    weights /= weights.sum()

    triples = []
    seen = set()

    def add_triple(subject, relation):
        if relation in literal:
            obj = '"%d"' % rng.integers(1800, 2020)
        else:
            obj = entities[rng.integers(n_entities)]
        triple = Triple(subject, relation, obj)
        if triple not in seen:
            seen.add(triple)
            triples.append(triple)
        return obj

    low, high = BACKGROUND_TRIPLES
    for entity in entities:
        for _ in range(rng.integers(low, high + 1)):
            add_triple(entity, relations[rng.choice(n_relations, p=weights)])

    def question():
        subject = entities[rng.integers(n_entities)]
        r = rng.choice(n_relations, p=weights)
        obj = add_triple(subject, relations[r])
        name = primary[subject]
        if subject in aliases and rng.random() < 0.5:
            name = aliases[subject]
        template = TEMPLATES[rng.integers(len(TEMPLATES))]
        text = template.format(verb=verbs[r], entity=name)
        span = derive_span(split_words(text), [name])
        return QAExample(text, subject, relations[r], obj, span)

    train = [question() for _ in range(n_questions)]
    dev = [question() for _ in range(n_questions // 5)]
    test = [question() for _ in range(n_questions // 5)]
    return ToyCorpus(triples, lexicon, toy_vocabulary(verbs), relations,
                     verbs, train, dev, test)
