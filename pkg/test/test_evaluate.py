import csv
import io
import json
import os
import unittest

import numpy as np

from sqparse.encoder import ModelConfig
from sqparse.evaluate import AttentionSignature, append_results, \
    attention_signature, cls_attention_row, compare_signatures, \
    component_report, evaluate, limited_data_run, mean_token_mass, \
    relation_accuracy, scaled_epochs, span_metrics
from sqparse.exceptions import ContractError
from sqparse.heads import new_model
from sqparse.kgstore import QAExample
from sqparse.linker import build_index
from sqparse.textproc import tokenize
from sqparse.trainer import TrainConfig, relation_vocabulary, train
from sqparse.utils import random_stream

from .helpers import FixedModel, TempDirMixin, tiny_model, toy_graph, \
    toy_vocab


RELATIONS = ['book/author/works', 'film/director/films', 'film/film/genre',
             'people/person/born']

SPANS = [('michael crichton', (2, 3)), ('john smith', (2, 3))]


class SpanMetricsTest(unittest.TestCase):

    def test_exact(self):
        self.assertEqual(span_metrics([(2, 3)], [(2, 3)]), (1.0, 1.0, 1.0))

    def test_partial_overlap(self):
        accuracy, avg_f1, dataset_f1 = span_metrics([(2, 4)], [(3, 5)])
        self.assertEqual(accuracy, 0.0)
        self.assertAlmostEqual(avg_f1, 2 / 3.0)
        self.assertAlmostEqual(dataset_f1, 2 / 3.0)

    def test_averaged_and_pooled_f1_diverge(self):
        # a long miss dominates the pooled counts but weighs one example
        accuracy, avg_f1, dataset_f1 = span_metrics([(0, 8), (0, 0)],
                                                    [(9, 17), (0, 0)])
        self.assertEqual(accuracy, 0.5)
        self.assertAlmostEqual(avg_f1, 0.5)
        self.assertAlmostEqual(dataset_f1, 0.1)

    def test_unsolvable_examples_score_zero(self):
        accuracy, avg_f1, dataset_f1 = span_metrics([(0, 1), (0, 0)],
                                                    [None, (0, 0)])
        self.assertEqual((accuracy, avg_f1), (0.5, 0.5))
        # predicted words of the unsolvable example only add to precision
        self.assertAlmostEqual(dataset_f1, 0.5)

    def test_mixed_fixture(self):
        preds = [(2, 3), (2, 4), (0, 8), (0, 1), (0, 0)]
        golds = [(2, 3), (3, 5), (9, 17), None, (0, 0)]
        accuracy, avg_f1, dataset_f1 = span_metrics(preds, golds)
        self.assertEqual(accuracy, 0.4)
        # per example F1 is 1, 2/3, 0, 0, 1
        self.assertAlmostEqual(avg_f1, 8 / 15.0)
        # 5 shared words over 17 predicted and 15 gold words
        self.assertEqual(dataset_f1, 0.3125)

    def test_empty_and_unaligned(self):
        self.assertEqual(span_metrics([], []), (0.0, 0.0, 0.0))
        self.assertRaises(ContractError, span_metrics, [(0, 0)], [])

    def test_relation_accuracy(self):
        self.assertEqual(relation_accuracy(['a', 'b', 'c', 'd'],
                                           ['a', 'b', 'c', 'x']), 0.75)
        self.assertRaises(ContractError, relation_accuracy, ['a'], [])


class ReportTest(unittest.TestCase):

    def setUp(self):
        self.graph = toy_graph()
        self.model = FixedModel(RELATIONS, np.array([0.8, 0.1, 0.05, 0.05]),
                                SPANS)
        self.dataset = [
            QAExample('who wrote michael crichton', 'm.crichton',
                      'book/author/works', 'm.jurassic', (2, 3)),
            QAExample('who directed john smith', 'm.smith2',
                      'film/director/films', 'm.jurassic', (2, 3)),
        ]

    def test_component_report(self):
        dataset = self.dataset + [
            QAExample('what is jurassic park', 'm.jurassic',
                      'film/film/genre', 'm.scifi', (2, 3))]
        report = component_report(self.model, dataset)
        self.assertAlmostEqual(report.span_accuracy, 2 / 3.0)
        self.assertAlmostEqual(report.relation_accuracy, 1 / 3.0)
        self.assertEqual(report.examples, 3)
        self.assertIsNone(report.end_to_end_accuracy)
        self.assertNotIn('e2e_acc', report.record())

    def test_end_to_end(self):
        report = evaluate(self.model, self.dataset, build_index(self.graph),
                          self.graph, recall_ns=(1, 5))
        self.assertEqual(report.recall, {1: 0.5, 5: 1.0})
        self.assertEqual(report.end_to_end_accuracy, 0.5)
        self.assertEqual(report.entity_accuracy, 0.5)
        self.assertEqual(report.reranked_relation_accuracy, 0.5)
        self.assertEqual(report.errors.both, 1)
        self.assertEqual(report.errors.retrieval_miss, 0)
        record = report.record()
        self.assertEqual(record['R@5'], 1.0)
        self.assertEqual(record['errors']['wrong'], 1)
        json.dumps(record)

    def test_unsolvable_examples_count(self):
        dataset = self.dataset + [
            QAExample('who is he', 'm.crichton', 'book/author/works',
                      'm.jurassic', None)]
        report = evaluate(self.model, dataset, build_index(self.graph),
                          self.graph, recall_ns=(1,))
        self.assertEqual((report.examples, report.unsolvable), (3, 1))
        self.assertAlmostEqual(report.span_accuracy, 2 / 3.0)


class LimitedDataTest(TempDirMixin, unittest.TestCase):

    def setUp(self):
        super(LimitedDataTest, self).setUp()
        questions = [('who wrote michael crichton', 'r0'),
                     ('who directed john smith', 'r1'),
                     ('what is jurassic park', 'r2')]
        self.train_set = [QAExample(q, 'm.x', r, 'm.y', (2, 3))
                          for q, r in questions * 2]
        self.model_config = ModelConfig({'layers': 1, 'heads': 2,
                                         'd_model': 8, 'd_ff': 16,
                                         'max_positions': 16})
        self.train_config = TrainConfig({'epochs': 1, 'batch_size': 4})

    def test_scaled_epochs(self):
        self.assertEqual(scaled_epochs(10, 200, 100, 10), 100)
        self.assertEqual(scaled_epochs(10, 50, 100, 10), 50)
        self.assertEqual(scaled_epochs(3, 200, 10, 3), 10)
        self.assertRaises(ContractError, scaled_epochs, 1, 1, 10, 0)

    def test_cells_and_results_file(self):
        results = self.path('results.jsonl')
        cells = limited_data_run([1.0, 0.34], self.train_set,
                                 self.train_set, toy_vocab(),
                                 self.model_config, self.train_config,
                                 results_path=results)
        self.assertEqual([c.retained for c in cells], [6, 2])
        self.assertTrue(cells[0].covered)
        self.assertIsNotNone(cells[0].rel_acc)
        self.assertFalse(cells[1].covered)
        self.assertIsNone(cells[1].rel_acc)
        self.assertIsNotNone(cells[1].span_acc)
        with io.open(results, encoding='utf-8') as f:
            records = [json.loads(line) for line in f]
        self.assertEqual([r['fraction'] for r in records], [1.0, 0.34])
        self.assertEqual(records[0]['seed'], self.train_config.seed)

    def test_full_cell_keeps_the_best_dev_epoch(self):
        dev = [QAExample('who wrote john smith', 'm.x', 'r0', 'm.y', (2, 3)),
               QAExample('what is michael crichton', 'm.x', 'r2', 'm.y',
                         (2, 3))]
        config = TrainConfig({'epochs': 3, 'batch_size': 4, 'lr': 0.01})
        (cell,) = limited_data_run([1.0], self.train_set, dev, toy_vocab(),
                                   self.model_config, config)

        model = new_model(self.model_config, toy_vocab(),
                          relation_vocabulary(self.train_set),
                          random_stream(config.seed, 'init'))
        result = train(model, self.train_set, config, dev=dev)
        report = component_report(model, dev)
        self.assertEqual((cell.span_acc, cell.rel_acc, cell.avg_f1),
                         (report.span_accuracy, report.relation_accuracy,
                          report.avg_f1))
        best = result.log[result.best_epoch - 1]
        self.assertEqual(cell.span_acc + cell.rel_acc,
                         best['dev_span_acc'] + best['dev_rel_acc'])

    def test_failed_cell_does_not_stop_the_run(self):
        unsolvable = [QAExample('who is he', 'm.x', 'r0', 'm.y', None)]
        cells = limited_data_run([1.0], unsolvable, unsolvable, toy_vocab(),
                                 self.model_config, self.train_config)
        self.assertTrue(cells[0].failed)
        self.assertIsNone(cells[0].span_acc)

    def test_fractions_are_checked_first(self):
        self.assertRaises(ContractError, limited_data_run, [0.5, 0.0],
                          self.train_set, self.train_set, toy_vocab(),
                          self.model_config, self.train_config)

    def test_results_are_appended(self):
        path = self.path('results.jsonl')
        append_results(path, [{'fraction': 0.5}])
        append_results(path, [{'fraction': 0.25}, {'fraction': 0.1}])
        with io.open(path, encoding='utf-8') as f:
            self.assertEqual([json.loads(line)['fraction'] for line in f],
                             [0.5, 0.25, 0.1])


class StubTrace(object):

    def __init__(self, alphas, tq):
        self.alphas = alphas
        self.tq = tq


def row_stochastic(rng, shape):
    values = rng.uniform(size=shape)
    return values / values.sum(axis=-1, keepdims=True)


class AttentionSignatureTest(TempDirMixin, unittest.TestCase):

    def setUp(self):
        super(AttentionSignatureTest, self).setUp()
        self.tq = tokenize('who wrote michael crichton', toy_vocab())

    def test_mean_over_layers_and_heads(self):
        rng = np.random.default_rng(3)
        alphas = row_stochastic(rng, (2, 3, 6, 6))
        signature = attention_signature(StubTrace(alphas, self.tq))
        expected = np.zeros((6, 6))
        for l in range(2):
            for m in range(3):
                expected += alphas[l, m]
        expected /= 6.0
        self.assertLess(np.abs(signature.beta - expected).max(), 1e-9)
        np.testing.assert_allclose(signature.beta.sum(axis=1), 1.0)
        self.assertEqual(list(signature.special), [0, 5])
        self.assertEqual(signature.labels[0], '[CLS]')

    def test_single_head_is_the_attention(self):
        alphas = row_stochastic(np.random.default_rng(4), (1, 1, 6, 6))
        signature = attention_signature(StubTrace(alphas, self.tq))
        np.testing.assert_array_equal(signature.beta, alphas[0, 0])

    def test_display_zeroes_special_columns(self):
        uniform = np.full((1, 1, 6, 6), 1 / 6.0)
        row = cls_attention_row(attention_signature(
            StubTrace(uniform, self.tq)))
        np.testing.assert_allclose(row, [0, 100 / 6.0, 100 / 6.0, 100 / 6.0,
                                         100 / 6.0, 0])
        self.assertLessEqual(row.sum(), 100.0)

    def test_display_keeps_the_signature(self):
        signature = AttentionSignature(np.full((2, 2), 0.5), ['a', 'b'], [0])
        shown = signature.display()
        self.assertEqual(signature.beta[0, 0], 0.5)
        self.assertEqual(shown.beta[0, 0], 0.0)
        self.assertEqual(shown.beta[1, 1], 50.0)

    def test_model_trace(self):
        model = tiny_model(seed=1, init_std=0.3)
        trace = model.predict(model.tokenize('who wrote john smith')).trace
        signature = attention_signature(trace)
        np.testing.assert_allclose(signature.beta.sum(axis=1), 1.0)
        self.assertEqual(len(cls_attention_row(trace)), len(trace.tq))

    def test_encoder_without_layers(self):
        model = tiny_model(layers=0)
        trace = model.predict(model.tokenize('who wrote')).trace
        self.assertRaises(ContractError, attention_signature, trace)

    def test_before_and_after(self):
        before, after = compare_signatures('who wrote john smith',
                                           tiny_model(seed=1, init_std=0.3),
                                           tiny_model(seed=2, init_std=0.3))
        self.assertEqual(before.labels, after.labels)
        self.assertFalse(np.allclose(before.beta, after.beta))

    def test_csv(self):
        uniform = np.full((1, 1, 6, 6), 1 / 6.0)
        signature = attention_signature(StubTrace(uniform, self.tq))
        signature.display().to_csv(self.path('cls.csv'))
        with io.open(self.path('cls.csv'), encoding='utf-8') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], self.tq.pieces)
        self.assertEqual(len(rows), 7)
        self.assertEqual(float(rows[1][0]), 0.0)
        self.assertAlmostEqual(float(rows[1][1]), 100 / 6.0, places=6)

    def test_heatmap(self):
        try:
            import matplotlib  # noqa
        except ImportError:
            self.skipTest('matplotlib is not installed')
        signature = attention_signature(
            StubTrace(np.full((1, 1, 6, 6), 1 / 6.0), self.tq))
        self.assertTrue(signature.display().heatmap(self.path('cls.png'),
                                                    'who wrote'))
        self.assertTrue(os.path.getsize(self.path('cls.png')) > 0)

    def test_mean_token_mass(self):
        rows = [np.array([0.0, 10.0, 20.0]), np.array([0.0, 30.0, 0.0])]
        self.assertEqual(mean_token_mass(rows, [[1, 2], [1]]), 30.0)
        self.assertEqual(mean_token_mass([], []), 0.0)
        self.assertRaises(ContractError, mean_token_mass, rows, [[1]])
