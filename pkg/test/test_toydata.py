import collections
import os
import unittest

from sqparse.exceptions import ConfigError
from sqparse.kgstore import load_dataset, load_graph, load_lexicon
from sqparse.textproc import UNK, load_vocab, tokenize
from sqparse.toydata import FILES, TEMPLATE_WORDS, generate_corpus

from .helpers import TempDirMixin


class ToyCorpusTest(TempDirMixin, unittest.TestCase):

    def read_all(self, directory):
        contents = {}
        for name in sorted(FILES.values()):
            with open(os.path.join(directory, name), 'rb') as f:
                contents[name] = f.read()
        return contents

    def test_same_seed_same_files(self):
        generate_corpus(7, 60, 8, 100).write(self.path('a'))
        generate_corpus(7, 60, 8, 100).write(self.path('b'))
        self.assertEqual(self.read_all(self.path('a')),
                         self.read_all(self.path('b')))
        generate_corpus(8, 60, 8, 100).write(self.path('c'))
        self.assertNotEqual(self.read_all(self.path('a'))['train.txt'],
                            self.read_all(self.path('c'))['train.txt'])

    def test_sizes(self):
        corpus = generate_corpus(1, 50, 5, 100)
        self.assertEqual((len(corpus.train), len(corpus.dev),
                          len(corpus.test)), (100, 20, 20))
        self.assertEqual(len(corpus.relations), 5)
        self.assertEqual(len(set(corpus.verbs)), 5)

    def test_every_example_is_solvable_after_loading(self):
        generate_corpus(3, 100, 10, 200).write(self.tmp)
        graph = load_graph(self.path(FILES['triples']))
        load_lexicon(self.path(FILES['lexicon']), graph)
        vocab = load_vocab(self.path(FILES['vocab']))
        for key in ('train', 'dev', 'test'):
            dataset = load_dataset(self.path(FILES[key]), graph)
            self.assertEqual(dataset.unsolvable, 0)
            self.assertEqual(len(dataset.unknown_relations), 0)
            for example in dataset:
                self.assertIn(example.gold_object,
                              graph.lookup(example.gold_subject,
                                           example.gold_relation))
                tq = tokenize(example.question, vocab)
                self.assertNotIn(UNK, tq.pieces)

    def test_name_words_are_not_template_words_or_verbs(self):
        corpus = generate_corpus(4, 100, 10, 10)
        reserved = set(TEMPLATE_WORDS) | set(corpus.verbs)
        for _, name in corpus.lexicon:
            self.assertFalse(reserved & set(name.split()), name)

    def test_relation_frequencies_are_skewed(self):
        corpus = generate_corpus(2, 200, 20, 500)
        counts = collections.Counter(e.gold_relation for e in corpus.train)
        ranked = sorted(counts.values(), reverse=True)
        self.assertGreaterEqual(ranked[0], 3 * ranked[len(ranked) // 2])

    def test_literal_relations(self):
        corpus = generate_corpus(6, 50, 10, 100)
        literal = [t for t in corpus.triples if t.object.startswith('"')]
        self.assertTrue(literal)
        self.assertLessEqual(set(t.relation for t in literal),
                             set(corpus.relations[4::5]))

    def test_counts_must_be_positive(self):
        self.assertRaises(ConfigError, generate_corpus, 1, 0, 5, 10)
        self.assertRaises(ConfigError, generate_corpus, 1, 10, 5, 0)
