"""
Knowledge graph, entity lexicon and question datasets.

All inputs are UTF-8 tab-separated files without a header:

    triples   subject<TAB>relation<TAB>object
    lexicon   entity<TAB>name
    dataset   subject<TAB>relation<TAB>object<TAB>question

An object wrapped in double quotes is a literal and never gets an entity
record; any other object is an entity id.
"""
import collections
import logging

from .exceptions import EmptyGraphError, FormatError
from .textproc import split_words
from .utils import atomic_open, read_tsv


logger = logging.getLogger(__name__)


def is_literal(obj):
    return len(obj) >= 2 and obj.startswith('"') and obj.endswith('"')


class Triple(collections.namedtuple('Triple', 'subject relation object')):
    __slots__ = ()


class EntityRecord(object):

    def __init__(self, id):
        self.id = id
        self.names = []
        self.out_degree = 0
        self.in_degree = 0
        self.outgoing_relations = set()

    def __repr__(self):
        return '<EntityRecord %s (%s)>' % (self.id, ', '.join(self.names))


class KnowledgeGraph(object):

    def __init__(self):
        self.triples = []
        self.records = collections.OrderedDict()
        self.relations = set()
        self._seen = set()
        self._objects = collections.defaultdict(list)

    def __len__(self):
        return len(self.triples)

    def _record(self, entity):
        record = self.records.get(entity)
        if record is None:
            record = self.records[entity] = EntityRecord(entity)
        return record

    def add(self, subject, relation, obj):
        """
        Add one triple; returns False when it was already stored.
        """
        triple = Triple(subject, relation, obj)
        if triple in self._seen:
            return False
        self._seen.add(triple)
        self.triples.append(triple)
        self.relations.add(relation)
        self._objects[(subject, relation)].append(obj)

        record = self._record(subject)
        record.out_degree += 1
        record.outgoing_relations.add(relation)
        if not is_literal(obj):
            self._record(obj).in_degree += 1
        return True

    def has_entity(self, entity):
        return entity in self.records

    def entity(self, entity):
        return self.records.get(entity)

    def names(self, entity):
        record = self.records.get(entity)
        return list(record.names) if record else []

    def in_degree(self, entity):
        record = self.records.get(entity)
        return record.in_degree if record else 0

    def out_degree(self, entity):
        record = self.records.get(entity)
        return record.out_degree if record else 0

    def outgoing_relations(self, entity):
        record = self.records.get(entity)
        return set(record.outgoing_relations) if record else set()

    def lookup(self, subject, relation):
        return list(self._objects.get((subject, relation), ()))


def load_graph(triples_path):
    graph = KnowledgeGraph()
    for lineno, (subject, relation, obj) in read_tsv(triples_path, 3):
        if not subject or not relation:
            raise FormatError('empty subject or relation', triples_path,
                              lineno)
        graph.add(subject, relation, obj)
    if not graph.triples:
        raise EmptyGraphError('no triples in %s' % triples_path)
    logger.info('loaded %d triples over %d entities and %d relations',
                len(graph.triples), len(graph.records), len(graph.relations))
    return graph


def load_lexicon(labels_path, graph):
    named = set()
    for lineno, (entity, name) in read_tsv(labels_path, 2):
        if not entity or not name.strip():
            raise FormatError('empty entity or name', labels_path, lineno)
        if not graph.has_entity(entity):
            logger.warning('lexicon entity %s is not in the graph', entity)
        record = graph._record(entity)
        if entity not in named:
            del record.names[:]
            named.add(entity)
        if name not in record.names:
            record.names.append(name)
    for record in graph.records.values():
        if not record.names:
            record.names.append(record.id)
    return graph


def lookup_answers(entity, relation, graph):
    return graph.lookup(entity, relation)


class QAExample(object):

    def __init__(self, question, gold_subject, gold_relation, gold_object,
                 gold_span=None):
        self.question = question
        self.gold_subject = gold_subject
        self.gold_relation = gold_relation
        self.gold_object = gold_object
        self.gold_span = gold_span

    @property
    def solvable(self):
        return self.gold_span is not None

    def __repr__(self):
        return '<QAExample %r span=%r>' % (self.question, self.gold_span)


class QADataset(list):
    """
    Examples in file order; ``unknown_relations`` counts gold relations the
    graph does not know.
    """

    def __init__(self, examples=(), unknown_relations=None):
        super(QADataset, self).__init__(examples)
        self.unknown_relations = unknown_relations or collections.Counter()

    @property
    def unsolvable(self):
        return sum(1 for example in self if not example.solvable)

    def relation_counts(self):
        return collections.Counter(example.gold_relation for example in self)


def derive_span(question_words, names):
    """
    Longest occurrence of a complete name in the question, on lowercased
    words; the leftmost one wins among equally long matches.
    """
    best = None
    for name in names:
        name_words = split_words(name)
        n = len(name_words)
        if not n or (best is not None and n <= best[1] - best[0] + 1):
            continue
        for start in range(len(question_words) - n + 1):
            if question_words[start:start + n] == name_words:
                best = (start, start + n - 1)
                break
    return best


def load_dataset(qa_path, graph):
    examples = QADataset()
    for lineno, (subject, relation, obj, question) in read_tsv(qa_path, 4):
        if not subject or not relation or not question.strip():
            raise FormatError('empty subject, relation or question', qa_path,
                              lineno)
        if relation not in graph.relations:
            examples.unknown_relations[relation] += 1
        span = derive_span(split_words(question), graph.names(subject))
        examples.append(QAExample(question, subject, relation, obj, span))
    if examples.unknown_relations:
        logger.warning('%d examples in %s have relations unknown to the '
                       'graph', sum(examples.unknown_relations.values()),
                       qa_path)
    logger.info('loaded %d examples from %s (%d unsolvable)',
                len(examples), qa_path, examples.unsolvable)
    return examples


def write_triples(triples, path):
    with atomic_open(path) as f:
        for subject, relation, obj in triples:
            f.write(u'%s\t%s\t%s\n' % (subject, relation, obj))


def write_lexicon(entries, path):
    with atomic_open(path) as f:
        for entity, name in entries:
            f.write(u'%s\t%s\n' % (entity, name))


def write_dataset(examples, path):
    with atomic_open(path) as f:
        for example in examples:
            f.write(u'%s\t%s\t%s\t%s\n' % (
                example.gold_subject, example.gold_relation,
                example.gold_object, example.question))
