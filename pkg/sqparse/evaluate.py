"""
Metrics over a QA dataset (span accuracy, both F1 variants, relation
accuracy, entity recall, end-to-end accuracy and its error taxonomy), the
limited-data experiment driver and attention signatures.
"""
import csv
import io
import json
import logging
import math
import os

import numpy as np

from .exceptions import ContractError, SQParseError
from .heads import new_model
from .linker import DEFAULT_LIMIT, STOP_WORDS, recall_at
from .nodes import CellResult, EvalReport
from .qanswer import analyze, categorize_errors
from .textproc import NO_WORD
from .trainer import relation_vocabulary, subsample, train
from .utils import atomic_open, random_stream


logger = logging.getLogger(__name__)

RECALL_AT = (1, 5, 20, 50, 150)
DISPLAY_SCALE = 100.0


def _positions(span):
    return set(range(span[0], span[1] + 1))


def span_metrics(pred_spans, gold_spans):
    """
    (accuracy, averaged F1, dataset F1) over inclusive word spans. A gold
    span of None marks an unsolvable example: it scores zero and adds its
    predicted words to the pooled precision denominator only.
    """
    if len(pred_spans) != len(gold_spans):
        raise ContractError('%d predicted spans for %d gold spans'
                            % (len(pred_spans), len(gold_spans)))
    if not gold_spans:
        return 0.0, 0.0, 0.0
    exact = 0
    f1_sum = 0.0
    overlap_total = pred_total = gold_total = 0
    for pred, gold in zip(pred_spans, gold_spans):
        pred_words = _positions(pred) if pred is not None else set()
        pred_total += len(pred_words)
        if gold is None:
            continue
        gold_words = _positions(gold)
        gold_total += len(gold_words)
        overlap = len(pred_words & gold_words)
        overlap_total += overlap
        if pred_words == gold_words:
            exact += 1
        if overlap:
            precision = overlap / float(len(pred_words))
            recall = overlap / float(len(gold_words))
            f1_sum += 2 * precision * recall / (precision + recall)

    n = float(len(gold_spans))
    if overlap_total:
        dataset_f1 = 2.0 * overlap_total / (pred_total + gold_total)
    else:
        dataset_f1 = 0.0
    return exact / n, f1_sum / n, dataset_f1


def relation_accuracy(preds, golds):
    if len(preds) != len(golds):
        raise ContractError('%d predicted relations for %d gold relations'
                            % (len(preds), len(golds)))
    if not golds:
        return 0.0
    return sum(1 for p, g in zip(preds, golds) if p == g) / float(len(golds))


def _gold_span(example):
    return example.gold_span if example.solvable else None


def component_report(model, dataset):
    """
    Span and relation metrics of the model's own predictions, without
    entity retrieval.
    """
    spans, relations = [], []
    for example in dataset:
        prediction = model.predict(model.tokenize(example.question))
        spans.append(prediction.span_words)
        relations.append(model.relations[int(np.argmax(
            prediction.relation_dist))])
    return _report(dataset, spans, relations)


def _report(dataset, spans, relations, **extra):
    accuracy, avg_f1, dataset_f1 = span_metrics(
        spans, [_gold_span(example) for example in dataset])
    obj = {
        'examples': len(dataset),
        'unsolvable': sum(1 for example in dataset if not example.solvable),
        'span_accuracy': accuracy,
        'avg_f1': avg_f1,
        'dataset_f1': dataset_f1,
        'relation_accuracy': relation_accuracy(
            relations, [example.gold_relation for example in dataset]),
    }
    obj.update(extra)
    return EvalReport(obj)


def evaluate(model, dataset, index, graph, k=DEFAULT_LIMIT,
             recall_ns=RECALL_AT, stop_words=STOP_WORDS):
    """
    Full report: component metrics, R@N of the candidate lists, end-to-end
    accuracy of the re-ranked logical forms and the error breakdown.
    """
    spans, relations, results, candidate_sets = [], [], [], []
    for example in dataset:
        analysis = analyze(example.question, model, index, graph, k,
                           stop_words, retrieve=max(recall_ns or (k,)))
        prediction = analysis.prediction
        spans.append(prediction.span_words)
        relations.append(model.relations[int(np.argmax(
            prediction.relation_dist))])
        results.append(analysis.result)
        candidate_sets.append(analysis.candidates)

    golds = [example.gold_subject for example in dataset]
    n = float(len(dataset)) or 1.0
    entity_hits = sum(1 for r, g in zip(results, dataset)
                      if r.entity == g.gold_subject)
    relation_hits = sum(1 for r, g in zip(results, dataset)
                        if r.relation == g.gold_relation)
    both_hits = sum(1 for r, g in zip(results, dataset)
                    if r.entity == g.gold_subject and
                    r.relation == g.gold_relation)
    return _report(
        dataset, spans, relations,
        recall=dict((m, recall_at(candidate_sets, golds, m))
                    for m in recall_ns),
        end_to_end_accuracy=both_hits / n,
        entity_accuracy=entity_hits / n,
        reranked_relation_accuracy=relation_hits / n,
        errors=categorize_errors(results, list(dataset), candidate_sets))


def scaled_epochs(epochs, max_epochs, total, retained):
    """
    Epoch budget for a subsample so the number of optimizer steps stays
    close to that of a full run.
    """
    if retained < 1:
        raise ContractError('no retained examples')
    return min(max_epochs, int(math.ceil(epochs * total / float(retained))))


def append_results(path, records):
    existing = u''
    if os.path.exists(path):
        with io.open(path, 'r', encoding='utf-8') as f:
            existing = f.read()
        if existing and not existing.endswith(u'\n'):
            existing += u'\n'
    with atomic_open(path) as f:
        f.write(existing)
        for record in records:
            f.write(u'%s\n' % json.dumps(record, sort_keys=True))


def limited_data_run(fractions, train_set, dev_set, vocab, model_config,
                     train_config, results_path=None):
    """
    Train a fresh model per fraction of the training set and score it on
    the full dev set, keeping the best dev epoch of each. Relation accuracy
    of a cell is None when its retained examples miss a relation of the full
    training set. A cell whose training fails is recorded as failed and the
    run goes on.
    """
    for fraction in fractions:
        if not 0 < fraction <= 1:
            raise ContractError('fraction %r outside (0, 1]' % fraction)
    all_relations = set(relation_vocabulary(train_set))
    seed = train_config.seed
    cells = []
    for fraction in fractions:
        retained, spec = subsample(train_set, fraction)
        relations = relation_vocabulary(retained)
        covered = set(relations) == all_relations
        cell = {'fraction': fraction, 'seed': seed,
                'retained': spec.retained, 'covered': covered}
        epochs = scaled_epochs(train_config.epochs, train_config.max_epochs,
                               spec.total, spec.retained)
        logger.info('fraction %.4f: %d of %d examples, %d epochs%s',
                    fraction, spec.retained, spec.total, epochs,
                    '' if covered else ', relations not covered')
        try:
            model = new_model(model_config, vocab, relations,
                              random_stream(seed, 'init'),
                              train_config.entity_mask_ablation)
            train(model, retained, train_config.with_options(epochs=epochs),
                  dev=dev_set)
            report = component_report(model, dev_set)
        except (SQParseError, ArithmeticError, ValueError) as e:
            logger.error('fraction %.4f failed: %s', fraction, e)
            cell['failed'] = True
        else:
            cell.update({
                'span_acc': report.span_accuracy,
                'avg_f1': report.avg_f1,
                'dataset_f1': report.dataset_f1,
                'rel_acc': report.relation_accuracy if covered else None,
            })
        result = CellResult(cell)
        cells.append(result)
        if results_path:
            append_results(results_path, [result.record()])
    return cells


def token_labels(tq):
    return list(tq.pieces)


class AttentionSignature(object):
    """
    Mean attention distribution of every token over all layers and heads.
    ``beta`` is row-stochastic until special columns are zeroed.
    """

    def __init__(self, beta, labels, special, scale=1.0, zeroed=False):
        self.beta = beta
        self.labels = labels
        self.special = special
        self.scale = scale
        self.zeroed = zeroed

    def __repr__(self):
        return '<AttentionSignature %dx%d>' % self.beta.shape

    def display(self, scale=DISPLAY_SCALE):
        """
        Copy with the columns of [CLS]/[SEP] set to zero and the values
        multiplied by ``scale``.
        """
        beta = self.beta / self.scale * scale
        beta[:, self.special] = 0.0
        return AttentionSignature(beta, self.labels, self.special, scale,
                                  True)

    def to_csv(self, path):
        with atomic_open(path) as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(self.labels)
            for row in self.beta:
                writer.writerow(['%.9g' % value for value in row])

    def heatmap(self, path, title=None):
        """
        Render the matrix to an image; returns False when it could not be
        drawn.
        """
        try:
            import matplotlib
            matplotlib.use('Agg')
            from matplotlib import pyplot
        except ImportError:
            logger.warning('matplotlib is not installed; no heatmap for %s',
                           path)
            return False
        n = len(self.labels)
        figure, axes = pyplot.subplots(figsize=(1 + 0.5 * n, 1 + 0.5 * n))
        try:
            image = axes.imshow(self.beta, cmap='viridis')
            axes.set_xticks(range(n))
            axes.set_yticks(range(n))
            axes.set_xticklabels(self.labels, rotation=90)
            axes.set_yticklabels(self.labels)
            if title:
                axes.set_title(title)
            figure.colorbar(image, ax=axes)
            figure.tight_layout()
            figure.savefig(path)
        except (OSError, ValueError) as e:
            logger.warning('could not render heatmap %s: %s', path, e)
            return False
        finally:
            pyplot.close(figure)
        return True


def attention_signature(trace):
    alphas = trace.alphas
    if not len(alphas):
        raise ContractError('trace of an encoder without layers has no '
                            'attention')
    layers, heads = alphas.shape[:2]
    beta = alphas.sum(axis=(0, 1)) / float(layers * heads)
    special = np.flatnonzero(trace.tq.word_index == NO_WORD)
    return AttentionSignature(beta, token_labels(trace.tq), special)


def cls_attention_row(signature):
    """
    Display values of the [CLS] row: special columns zeroed, times 100.
    Accepts a signature or a forward trace.
    """
    if not isinstance(signature, AttentionSignature):
        signature = attention_signature(signature)
    if not signature.zeroed:
        signature = signature.display()
    return signature.beta[0].copy()


def compare_signatures(question, before, after):
    """
    Signatures of the same question under two models (e.g. the weights
    before and after training).
    """
    signatures = []
    for model in (before, after):
        trace = model.predict(model.tokenize(question)).trace
        signatures.append(attention_signature(trace))
    return tuple(signatures)


def mean_token_mass(rows, positions):
    """
    Mean over questions of the displayed [CLS] attention on the given
    positions of each question.
    """
    if len(rows) != len(positions):
        raise ContractError('%d rows for %d position lists'
                            % (len(rows), len(positions)))
    if not rows:
        return 0.0
    return float(np.mean([row[list(p)].sum() for row, p in
                          zip(rows, positions)]))
