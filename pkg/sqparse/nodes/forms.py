from .utils import build_from_item
from .nodes import Node


class Candidate(Node):
    """
    Entity retrieved for a question span, with the evidence it was ranked by.
    """

    fields = ('entity', 'name', 'similarity', 'out_degree', 'in_degree')

    def __init__(self, obj):
        self.entity = obj.get('entity')
        self.name = obj.get('name')
        self.similarity = obj.get('similarity', 0.0)
        self.out_degree = obj.get('out_degree', 0)
        self.in_degree = obj.get('in_degree', 0)

    def __repr__(self):
        return '<Candidate %s (%.3f)>' % (self.entity, self.similarity)

    def sort_key(self):
        return (-self.similarity, -self.out_degree, self.entity)

    def entities(self):
        return {self.entity}


class LogicalForm(Node):
    """
    Entity-relation pair; the answer query retrieves every object of the
    triples (entity, relation, ?).
    """

    fields = ('entity', 'relation', 'similarity', 'probability', 'in_degree')

    def __init__(self, obj):
        self.entity = obj.get('entity')
        self.relation = obj.get('relation')
        self.similarity = obj.get('similarity', 0.0)
        self.probability = obj.get('probability', 0.0)
        self.in_degree = obj.get('in_degree', 0)

    def __repr__(self):
        return '<LogicalForm (%s, %s)>' % (self.entity, self.relation)

    def __str__(self):
        return '%s %s ?x' % (self.entity, self.relation)

    def sort_key(self):
        return (-self.similarity, -self.probability, -self.in_degree,
                self.entity, self.relation)

    def entities(self):
        return {self.entity}


class Answer(Node):

    fields = ('question', 'span', 'span_words', 'form', 'objects',
              'alternatives')

    def __init__(self, obj):
        self.question = obj.get('question')
        self.span = obj.get('span')
        self.span_words = tuple(obj.get('span_words') or ())
        self.form = build_from_item(obj, 'form')
        self.objects = build_from_item(obj, 'objects') or []
        self.alternatives = build_from_item(obj, 'alternatives') or []

    def __repr__(self):
        return '<Answer %r>' % self.form

    @property
    def entity(self):
        return self.form.entity

    @property
    def relation(self):
        return self.form.relation

    def record(self):
        """
        Flat JSON form printed by the ``answer`` command.
        """
        return {
            'question': self.question,
            'span': self.span,
            'entity': self.form.entity,
            'relation': self.form.relation,
            'objects': [str(o) for o in self.objects],
            'alternatives': [{'entity': a.entity, 'relation': a.relation,
                              'similarity': a.similarity,
                              'probability': a.probability}
                             for a in self.alternatives[:5]],
        }


class NoAnswer(Node):
    """
    First-class failed answer; ``reason`` is one of NO_CANDIDATES or
    NO_LOGICAL_FORM.
    """

    NO_CANDIDATES = 'no_candidates'
    NO_LOGICAL_FORM = 'no_logical_form'

    fields = ('question', 'span', 'span_words', 'reason')

    def __init__(self, obj):
        self.question = obj.get('question')
        self.span = obj.get('span')
        self.span_words = tuple(obj.get('span_words') or ())
        self.reason = obj.get('reason')
        self.form = None
        self.objects = []
        self.alternatives = []

    def __repr__(self):
        return '<NoAnswer %s>' % self.reason

    entity = None
    relation = None

    def entities(self):
        return set()

    def record(self):
        return {
            'question': self.question,
            'span': self.span,
            'entity': None,
            'relation': None,
            'objects': [],
            'alternatives': [],
            'reason': self.reason,
        }
