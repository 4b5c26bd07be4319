import io
import json
import os
import unittest
from unittest import mock

from sqparse import cli
from sqparse.kgstore import load_dataset, load_graph, load_lexicon

from .helpers import TempDirMixin


TINY = ['layers=1', 'heads=2', 'd_model=8', 'd_ff=16', 'epochs=1',
        'batch_size=16', 'seed=5']


class CommandLineTest(TempDirMixin, unittest.TestCase):

    def run_cli(self, *argv):
        args = ['-q', '--set', 'data_dir=%s' % self.tmp]
        for option in TINY:
            args += ['--set', option]
        with mock.patch('sys.stdout', new_callable=io.StringIO) as out, \
                mock.patch('sys.stderr', new_callable=io.StringIO) as err:
            code = cli.main(args + list(argv))
        self.stderr = err.getvalue()
        lines = [line for line in out.getvalue().splitlines() if line]
        return code, [json.loads(line) for line in lines]

    def prepare(self, train=True):
        code, _ = self.run_cli('gen-toy', '--entities', '30', '--relations',
                               '4', '--questions', '40')
        self.assertEqual(code, 0)
        if train:
            code, _ = self.run_cli('train', '--checkpoints')
            self.assertEqual(code, 0)

    def test_generate_and_index(self):
        self.prepare(train=False)
        for name in ('triples.txt', 'lexicon.txt', 'vocab.txt', 'train.txt',
                     'valid.txt', 'test.txt'):
            self.assertTrue(os.path.exists(self.path(name)), name)
        code, _ = self.run_cli('build-index')
        self.assertEqual(code, 0)
        self.assertTrue(os.path.exists(self.path('index.bin')))

    def test_train_and_evaluate(self):
        self.prepare()
        for name in ('weights.bin', 'vocab.txt', 'relations.txt',
                     'model.conf', 'metrics.jsonl', 'optimizer.bin',
                     'run.conf'):
            self.assertTrue(os.path.exists(self.path('model', name)), name)
        self.assertTrue(os.path.exists(
            self.path('model', 'checkpoints', 'checkpoint-001.bin')))
        code, records = self.run_cli('eval', '--split', 'test')
        self.assertEqual(code, 0)
        record = records[0]
        self.assertEqual(record['split'], 'test')
        self.assertEqual(record['examples'], 8)
        for key in ('span_acc', 'rel_acc', 'R@1', 'R@150', 'e2e_acc',
                    'errors'):
            self.assertIn(key, record)

    def test_answer(self):
        self.prepare()
        code, records = self.run_cli('answer', 'zzzz qqqq')
        self.assertEqual(code, cli.EXIT_NO_ANSWER)
        self.assertEqual(records[0]['reason'], 'no_candidates')
        with io.open(self.path('train.txt'), encoding='utf-8') as f:
            question = f.readline().rstrip('\n').split('\t')[3]
        code, records = self.run_cli('answer', question)
        self.assertIn(code, (0, cli.EXIT_NO_ANSWER))
        self.assertEqual(records[0]['question'], question)

    def test_attention_before_and_after(self):
        self.prepare()
        prefix = self.path('signature')
        code, records = self.run_cli(
            'attention', '--question', 'who tells me', '--out', prefix,
            '--before', self.path('model', 'checkpoints',
                                  'checkpoint-001.bin'),
            '--after', self.path('model', 'weights.bin'))
        self.assertEqual(code, 0)
        self.assertEqual(len(records), 2)
        self.assertTrue(os.path.exists(prefix + '.before.csv'))
        self.assertTrue(os.path.exists(prefix + '.after.csv'))
        self.assertEqual(records[0]['tokens'][0], '[CLS]')
        self.assertEqual(records[0]['cls'][0], 0.0)

    def test_attention_needs_both_archives(self):
        self.prepare()
        code, _ = self.run_cli('attention', '--question', 'who', '--out',
                               self.path('x'), '--before',
                               self.path('model', 'weights.bin'))
        self.assertEqual(code, cli.EXIT_ERROR)

    def test_subsample(self):
        self.prepare(train=False)
        out = self.path('half.txt')
        code, records = self.run_cli('subsample', '--fraction', '0.5',
                                     '--out', out)
        self.assertEqual(code, 0)
        self.assertEqual(records[0]['retained'], 20)
        graph = load_lexicon(self.path('lexicon.txt'),
                             load_graph(self.path('triples.txt')))
        self.assertEqual(len(load_dataset(out, graph)), 20)

    def test_limited_data(self):
        self.prepare(train=False)
        code, records = self.run_cli('limited-data', '--fractions',
                                     '1.0,0.5')
        self.assertEqual(code, 0)
        self.assertEqual([r['fraction'] for r in records], [1.0, 0.5])
        with io.open(self.path('results.jsonl'), encoding='utf-8') as f:
            self.assertEqual(len(f.readlines()), 2)

    def test_unknown_configuration_key(self):
        code, _ = self.run_cli('--set', 'bogus=1', 'build-index')
        self.assertEqual(code, cli.EXIT_ERROR)
        self.assertTrue(self.stderr.startswith('error: ConfigError'))

    def test_missing_data(self):
        code, _ = self.run_cli('build-index')
        self.assertEqual(code, cli.EXIT_ERROR)
        self.assertTrue(self.stderr.startswith('error: '))
