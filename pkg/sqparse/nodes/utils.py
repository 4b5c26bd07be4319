import importlib

from six import next, iterkeys, itervalues, iteritems


module = importlib.import_module('sqparse.nodes')


def get_node_class(class_name):
    _class = getattr(module, class_name, None)
    return _class if isinstance(_class, type) else None


def build_from_obj(obj):
    """
    Rebuild a node tree from its JSON form, ``{ClassName: {field: value}}``.
    Anything that is not a single-key dict naming a node class is returned
    as is.
    """
    if isinstance(obj, list):
        return [build_from_obj(item) for item in obj]
    if not isinstance(obj, dict) or len(obj) != 1:
        return obj
    _class = get_node_class(next(iterkeys(obj)))
    return _class(next(itervalues(obj))) if _class else obj


def build_from_item(obj, key):
    return build_from_obj(obj[key]) if key in obj else None


def to_obj(value):
    if hasattr(value, 'to_obj'):
        return value.to_obj()
    if isinstance(value, (list, tuple)):
        return [to_obj(item) for item in value]
    if isinstance(value, dict):
        return dict((k, to_obj(v)) for k, v in iteritems(value))
    return value
