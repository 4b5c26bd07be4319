import six


class Node(object):

    # attribute names written by to_obj(), in order
    fields = ()

    def entities(self):
        """
        Generic method that does a depth-first search on the node attributes
        and collects the ids of every entity mentioned below this node.

        Child classes should override this method for better performance.
        """
        _entities = set()

        for attr in six.itervalues(self.__dict__):
            if isinstance(attr, list):
                for item in attr:
                    if isinstance(item, Node):
                        _entities |= item.entities()
            elif isinstance(attr, Node):
                _entities |= attr.entities()

        return _entities

    def to_obj(self):
        from .utils import to_obj
        return {type(self).__name__:
                dict((name, to_obj(getattr(self, name)))
                     for name in self.fields)}

    def __eq__(self, other):
        return type(self) is type(other) and self.to_obj() == other.to_obj()

    def __ne__(self, other):
        return not self == other

    __hash__ = None
