import six


@six.python_2_unicode_compatible
class SQParseError(Exception):

    def __init__(self, message):
        super(SQParseError, self).__init__(message)
        self.message = message

    def __str__(self):
        return self.message


class FormatError(SQParseError):
    """
    A malformed line in one of the tab-separated inputs, a vocabulary file
    or a configuration file.
    """

    def __init__(self, message, path=None, lineno=None):
        if lineno is not None:
            message = '%s:%d: %s' % (path or '<input>', lineno, message)
        super(FormatError, self).__init__(message)
        self.path = path
        self.lineno = lineno


class EmptyGraphError(SQParseError):
    pass


class SequenceLengthError(SQParseError):

    def __init__(self, message, length, limit):
        super(SequenceLengthError, self).__init__(message)
        self.length = length
        self.limit = limit


class ContractError(SQParseError):
    pass


class ArchiveError(SQParseError):

    def __init__(self, message, tensor=None):
        if tensor is not None:
            message = '%s: %s' % (tensor, message)
        super(ArchiveError, self).__init__(message)
        self.tensor = tensor


class ConfigError(SQParseError):

    def __init__(self, message, key=None):
        if key is not None:
            message = '%s: %s' % (key, message)
        super(ConfigError, self).__init__(message)
        self.key = key


class TrainingError(SQParseError):
    pass


class NoAnswerError(SQParseError):

    def __init__(self, reason, message=None):
        super(NoAnswerError, self).__init__(message or reason)
        self.reason = reason
