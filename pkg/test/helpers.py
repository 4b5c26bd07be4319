import io
import os
import shutil
import tempfile

import numpy as np

from sqparse.encoder import ModelConfig
from sqparse.heads import new_model
from sqparse.kgstore import KnowledgeGraph, load_graph, load_lexicon
from sqparse.textproc import SPECIAL_TOKENS, Vocabulary, tokenize
from sqparse.utils import random_stream


TRIPLES = [
    ('m.crichton', 'book/author/works', 'm.jurassic'),
    ('m.crichton', 'book/author/works', 'm.lostworld'),
    ('m.crichton', 'people/person/born', '"1942"'),
    ('m.smith1', 'book/author/works', 'm.lostworld'),
    ('m.smith1', 'people/person/born', '"1950"'),
    ('m.smith1', 'film/director/films', 'm.jurassic'),
    ('m.smith2', 'film/director/films', 'm.jurassic'),
    ('m.jurassic', 'film/film/genre', 'm.scifi'),
    ('m.crichtonjr', 'people/person/born', '"1980"'),
]

LEXICON = [
    ('m.crichton', 'Michael Crichton'),
    ('m.jurassic', 'Jurassic Park'),
    ('m.lostworld', 'The Lost World'),
    ('m.smith1', 'John Smith'),
    ('m.smith2', 'John Smith'),
    ('m.scifi', 'science fiction'),
    ('m.crichtonjr', 'Michael Crichton Jr'),
]

WORDS = ['who', 'wrote', 'directed', 'what', 'is', 'the', 'of', '?',
         'michael', 'crichton', 'jr', 'jurassic', 'park', 'lost', 'world',
         'john', 'smith', 'no', '##bu', '##o', 'ue', '##matsu']


def write_lines(path, lines):
    with io.open(path, 'w', encoding='utf-8') as f:
        for line in lines:
            f.write(u'%s\n' % line)
    return path


def toy_graph():
    directory = tempfile.mkdtemp()
    try:
        graph = KnowledgeGraph()
        for triple in TRIPLES:
            graph.add(*triple)
        path = write_lines(os.path.join(directory, 'lexicon.txt'),
                           ['%s\t%s' % entry for entry in LEXICON])
        return load_lexicon(path, graph)
    finally:
        shutil.rmtree(directory)


def corpus_graph(corpus):
    directory = tempfile.mkdtemp()
    try:
        corpus.write(directory)
        graph = load_graph(os.path.join(directory, 'triples.txt'))
        return load_lexicon(os.path.join(directory, 'lexicon.txt'), graph)
    finally:
        shutil.rmtree(directory)


def toy_vocab(words=WORDS):
    return Vocabulary(list(SPECIAL_TOKENS) + list(words))


def tiny_model(relations=('r0', 'r1', 'r2'), vocab=None, seed=0,
               ablation='none', **options):
    obj = {'layers': 1, 'heads': 2, 'd_model': 8, 'd_ff': 16,
           'max_positions': 16}
    obj.update(options)
    return new_model(ModelConfig(obj), vocab or toy_vocab(), list(relations),
                     random_stream(seed, 'init'), ablation)


class TempDirMixin(object):

    def setUp(self):
        super(TempDirMixin, self).setUp()
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)
        super(TempDirMixin, self).tearDown()

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)


class FixedPrediction(object):

    def __init__(self, tq, span_words, relation_dist):
        self.tq = tq
        self.span_words = span_words
        self.relation_dist = np.asarray(relation_dist, dtype=float)

    @property
    def span_text(self):
        return self.tq.span_text(*self.span_words)


class FixedModel(object):
    """
    Stands in for a QAModel: predicts the span of the first word found in
    ``spans`` and a fixed relation distribution.
    """

    def __init__(self, relations, relation_dist, spans, vocab=None):
        self.relations = list(relations)
        self.relation_dist = relation_dist
        self.spans = spans
        self.vocab = vocab or toy_vocab()

    def tokenize(self, question):
        return tokenize(question, self.vocab)

    def predict(self, tq):
        span = (0, 0)
        for words, candidate in self.spans:
            if ' '.join(tq.words[candidate[0]:candidate[1] + 1]) == words:
                span = candidate
                break
        return FixedPrediction(tq, span, self.relation_dist)

    def relation_ranking(self, relation_dist):
        return dict(zip(self.relations, relation_dist.tolist()))
