import six

from .utils import build_from_item
from .nodes import Node


class ErrorBreakdown(Node):
    """
    Taxonomy of wrong end-to-end predictions.

    ``both``, ``entity_only`` and ``relation_only`` partition the wrong
    predictions. ``retrieval_miss`` counts wrong predictions whose gold
    entity was absent from the candidate set, ``miss_share`` gives that
    share per category and ``relation_error_given_hit``/``_miss`` the
    fraction of wrong predictions with a wrong relation, split by whether
    retrieval found the gold entity.
    """

    fields = ('total', 'wrong', 'both', 'entity_only', 'relation_only',
              'retrieval_miss', 'relation_error_given_hit',
              'relation_error_given_miss', 'miss_share')

    def __init__(self, obj):
        self.total = obj.get('total', 0)
        self.wrong = obj.get('wrong', 0)
        self.both = obj.get('both', 0)
        self.entity_only = obj.get('entity_only', 0)
        self.relation_only = obj.get('relation_only', 0)
        self.retrieval_miss = obj.get('retrieval_miss', 0)
        self.relation_error_given_hit = obj.get('relation_error_given_hit')
        self.relation_error_given_miss = obj.get('relation_error_given_miss')
        self.miss_share = dict(obj.get('miss_share') or {})

    def __repr__(self):
        return '<ErrorBreakdown both=%d entity=%d relation=%d>' % (
            self.both, self.entity_only, self.relation_only)

    def fractions(self):
        if not self.wrong:
            return {'both': 0.0, 'entity_only': 0.0, 'relation_only': 0.0}
        return {'both': self.both / float(self.wrong),
                'entity_only': self.entity_only / float(self.wrong),
                'relation_only': self.relation_only / float(self.wrong)}


class EvalReport(Node):

    fields = ('examples', 'unsolvable', 'span_accuracy', 'avg_f1',
              'dataset_f1', 'relation_accuracy', 'recall',
              'end_to_end_accuracy', 'entity_accuracy',
              'reranked_relation_accuracy', 'errors')

    def __init__(self, obj):
        self.examples = obj.get('examples', 0)
        self.unsolvable = obj.get('unsolvable', 0)
        self.span_accuracy = obj.get('span_accuracy', 0.0)
        self.avg_f1 = obj.get('avg_f1', 0.0)
        self.dataset_f1 = obj.get('dataset_f1', 0.0)
        self.relation_accuracy = obj.get('relation_accuracy', 0.0)
        # JSON turns the int keys of R@N into strings
        self.recall = dict((int(n), r) for n, r in
                           six.iteritems(obj.get('recall') or {}))
        self.end_to_end_accuracy = obj.get('end_to_end_accuracy')
        self.entity_accuracy = obj.get('entity_accuracy')
        self.reranked_relation_accuracy = obj.get(
            'reranked_relation_accuracy')
        self.errors = build_from_item(obj, 'errors')

    def __repr__(self):
        return '<EvalReport span=%.3f rel=%.3f>' % (
            self.span_accuracy, self.relation_accuracy)

    def record(self):
        """
        Flat metrics for the metric log and the ``eval`` command output.
        """
        record = {
            'examples': self.examples,
            'unsolvable': self.unsolvable,
            'span_acc': self.span_accuracy,
            'avg_f1': self.avg_f1,
            'dataset_f1': self.dataset_f1,
            'rel_acc': self.relation_accuracy,
        }
        for n in sorted(self.recall):
            record['R@%d' % n] = self.recall[n]
        if self.end_to_end_accuracy is not None:
            record['e2e_acc'] = self.end_to_end_accuracy
            record['entity_acc'] = self.entity_accuracy
            record['reranked_rel_acc'] = self.reranked_relation_accuracy
        if self.errors is not None:
            record['errors'] = self.errors.to_obj()['ErrorBreakdown']
        return record


class CellResult(Node):
    """
    One (fraction, seed) cell of a limited-data run. Built from and written
    as a flat results-file line.
    """

    fields = ('fraction', 'seed', 'retained', 'span_acc', 'avg_f1',
              'dataset_f1', 'rel_acc', 'covered', 'failed')

    def __init__(self, obj):
        self.fraction = obj.get('fraction')
        self.seed = obj.get('seed')
        self.retained = obj.get('retained')
        self.span_acc = obj.get('span_acc')
        self.avg_f1 = obj.get('avg_f1')
        self.dataset_f1 = obj.get('dataset_f1')
        # None when the retained examples do not cover every relation
        self.rel_acc = obj.get('rel_acc')
        self.covered = obj.get('covered', False)
        self.failed = obj.get('failed', False)

    def __repr__(self):
        return '<CellResult %.4f>' % self.fraction

    def record(self):
        return dict((name, getattr(self, name)) for name in self.fields)
