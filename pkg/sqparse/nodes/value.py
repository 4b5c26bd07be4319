import abc

import six

from .nodes import Node


@six.add_metaclass(abc.ABCMeta)
class Value(Node):
    """
    Object position of a triple: an entity of the graph or a literal string.
    """

    def __str__(self):
        return str(self.val)

    def __repr__(self):
        return '<%s (%s)>' % (type(self).__name__, self.val)

    @abc.abstractproperty
    def val(self):
        pass


class Entity(Value):

    fields = ('id',)

    def __init__(self, obj):
        self.id = obj.get('id')

    @property
    def val(self):
        return self.id

    def entities(self):
        return {self.id}


class Literal(Value):

    fields = ('text',)

    def __init__(self, obj):
        self.text = obj.get('text')

    @property
    def val(self):
        return self.text

    def entities(self):
        return set()


def value_for(obj, graph):
    """
    Wrap a raw triple object as an Entity when the graph has a record for it,
    otherwise as a Literal.
    """
    if graph.has_entity(obj):
        return Entity({'id': obj})
    return Literal({'text': obj})
