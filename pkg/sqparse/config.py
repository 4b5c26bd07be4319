"""
Run configuration: a flat UTF-8 ``key=value`` file, overridden by
command-line ``--set key=value`` pairs, validated against SCHEMA.
"""
import collections
import io
import os

import six

from .exceptions import ConfigError, FormatError
from .utils import atomic_open


DATA_DIR_ENV = 'SQPARSE_DATA_DIR'


def _bool(value):
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError('not a boolean: %r' % value)


def _ints(value):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(v) for v in str(value).split(',') if v.strip()]


def _floats(value):
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(v) for v in str(value).split(',') if v.strip()]


def _words(value):
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(',') if v.strip()]


# key: (parser, default, allowed values or None)
SCHEMA = collections.OrderedDict([
    ('seed', (int, 13, None)),
    # model
    ('layers', (int, 2, None)),
    ('heads', (int, 2, None)),
    ('d_model', (int, 64, None)),
    ('d_ff', (int, 256, None)),
    ('max_positions', (int, 64, None)),
    ('scale_attention', (_bool, True, None)),
    ('output_projection', (_bool, True, None)),
    ('init_std', (float, 0.02, None)),
    # training
    ('epochs', (int, 10, None)),
    ('max_epochs', (int, 200, None)),
    ('batch_size', (int, 32, None)),
    ('lr', (float, 1e-3, None)),
    ('warmup_fraction', (float, 0.05, None)),
    ('schedule', (str, 'cosine', ('cosine', 'cosine_restarts'))),
    ('restart_cycles', (int, 3, None)),
    ('beta1', (float, 0.9, None)),
    ('beta2', (float, 0.999, None)),
    ('adam_eps', (float, 1e-8, None)),
    ('clip_norm', (float, 1.0, None)),
    ('loss_start', (float, 1.0, None)),
    ('loss_end', (float, 1.0, None)),
    ('loss_relation', (float, 1.0, None)),
    ('entity_mask_ablation', (str, 'none', ('none', 'attention', 'token'))),
    # retrieval and evaluation
    ('top_k', (int, 50, None)),
    ('recall_at', (_ints, [1, 5, 20, 50, 150], None)),
    ('stop_words', (_words, ['the', 'of', 'a', 'in'], None)),
    ('fractions', (_floats, [0.05, 0.25, 1.0], None)),
    # paths, relative ones resolve against data_dir
    ('data_dir', (str, '', None)),
    ('triples', (str, 'triples.txt', None)),
    ('lexicon', (str, 'lexicon.txt', None)),
    ('vocab', (str, 'vocab.txt', None)),
    ('train', (str, 'train.txt', None)),
    ('dev', (str, 'valid.txt', None)),
    ('test', (str, 'test.txt', None)),
    ('model_dir', (str, 'model', None)),
    ('index', (str, 'index.bin', None)),
    ('results', (str, 'results.jsonl', None)),
])

MODEL_KEYS = ('layers', 'heads', 'd_model', 'd_ff', 'max_positions',
              'scale_attention', 'output_projection', 'init_std')
TRAIN_KEYS = ('epochs', 'max_epochs', 'batch_size', 'lr', 'warmup_fraction',
              'schedule', 'restart_cycles', 'beta1', 'beta2', 'adam_eps',
              'clip_norm', 'loss_start', 'loss_end', 'loss_relation',
              'entity_mask_ablation', 'seed')
PATH_KEYS = ('triples', 'lexicon', 'vocab', 'train', 'dev', 'test',
             'model_dir', 'index', 'results')


def read_key_values(path):
    values = collections.OrderedDict()
    with io.open(path, 'r', encoding='utf-8') as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise FormatError('expected key=value', path, lineno)
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
    return values


def _format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ','.join(str(v) for v in value)
    return str(value)


def write_key_values(path, values):
    with atomic_open(path) as f:
        for key, value in six.iteritems(values):
            f.write(u'%s=%s\n' % (key, _format_value(value)))


def parse_override(text):
    if '=' not in text:
        raise ConfigError('override %r is not key=value' % text)
    key, value = text.split('=', 1)
    return key.strip(), value.strip()


class RunConfig(object):

    def __init__(self, obj=None):
        self.values = collections.OrderedDict(
            (key, default) for key, (_, default, _) in six.iteritems(SCHEMA))
        for key, value in six.iteritems(obj or {}):
            self[key] = value

    @classmethod
    def load(cls, path=None, overrides=()):
        config = cls(read_key_values(path) if path else None)
        for key, value in overrides:
            config[key] = value
        return config

    def __getitem__(self, key):
        if key not in SCHEMA:
            raise ConfigError('unknown configuration key', key)
        return self.values[key]

    def __setitem__(self, key, value):
        if key not in SCHEMA:
            raise ConfigError('unknown configuration key', key)
        parser, _, allowed = SCHEMA[key]
        try:
            value = parser(value)
        except (TypeError, ValueError) as e:
            raise ConfigError('invalid value %r (%s)' % (value, e), key)
        if allowed is not None and value not in allowed:
            raise ConfigError('must be one of %s' % ', '.join(allowed), key)
        self.values[key] = value

    def data_dir(self):
        return (self.values['data_dir'] or os.environ.get(DATA_DIR_ENV)
                or os.getcwd())

    def path(self, key):
        if key not in PATH_KEYS:
            raise ConfigError('not a path key', key)
        value = os.path.expanduser(self.values[key])
        if os.path.isabs(value):
            return value
        return os.path.join(self.data_dir(), value)

    def model_options(self):
        return dict((key, self.values[key]) for key in MODEL_KEYS)

    def train_options(self):
        return dict((key, self.values[key]) for key in TRAIN_KEYS)

    def save(self, path):
        write_key_values(path, self.values)
