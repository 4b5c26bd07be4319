"""
Optimization: learning-rate schedules, Adam, mini-batch training with
per-epoch validation, and relation-aware training-set subsampling.
"""
import collections
import heapq
import io
import json
import logging
import math
import os

import numpy as np

from .archive import read_archive, write_archive
from .exceptions import ArchiveError, ConfigError, ContractError, \
    TrainingError
from .heads import targets_for
from .utils import atomic_open, random_stream, round_half_up


logger = logging.getLogger(__name__)


class TrainConfig(object):

    def __init__(self, obj):
        self.epochs = int(obj.get('epochs', 10))
        self.max_epochs = int(obj.get('max_epochs', 200))
        self.batch_size = int(obj.get('batch_size', 32))
        self.lr = float(obj.get('lr', 1e-3))
        self.warmup_fraction = float(obj.get('warmup_fraction', 0.05))
        self.schedule = obj.get('schedule', 'cosine')
        self.restart_cycles = int(obj.get('restart_cycles', 3))
        self.beta1 = float(obj.get('beta1', 0.9))
        self.beta2 = float(obj.get('beta2', 0.999))
        self.adam_eps = float(obj.get('adam_eps', 1e-8))
        self.clip_norm = obj.get('clip_norm', 1.0)
        self.loss_weights = (float(obj.get('loss_start', 1.0)),
                             float(obj.get('loss_end', 1.0)),
                             float(obj.get('loss_relation', 1.0)))
        self.entity_mask_ablation = obj.get('entity_mask_ablation', 'none')
        self.seed = int(obj.get('seed', 13))

        if not 0 <= self.warmup_fraction < 1:
            raise ConfigError('must be in [0, 1)', 'warmup_fraction')
        if self.batch_size < 1:
            raise ConfigError('must be >= 1', 'batch_size')
        if self.epochs < 1:
            raise ConfigError('must be >= 1', 'epochs')
        if self.schedule not in ('cosine', 'cosine_restarts'):
            raise ConfigError('unknown schedule %r' % self.schedule,
                              'schedule')
        if self.restart_cycles < 1:
            raise ConfigError('must be >= 1', 'restart_cycles')

    def with_options(self, **options):
        obj = dict(self.__dict__)
        obj.update(zip(('loss_start', 'loss_end', 'loss_relation'),
                       obj.pop('loss_weights')))
        obj.update(options)
        return TrainConfig(obj)


def lr_at(t, total, config):
    """
    Linear warmup over the first round(warmup_fraction * total) steps, then
    cosine annealing to zero; ``cosine_restarts`` splits the annealing range
    into ``restart_cycles`` equal cosine cycles.
    """
    if total <= 0:
        raise ContractError('schedule over %d steps' % total)
    if not 0 <= t <= total:
        raise ContractError('step %d outside [0, %d]' % (t, total))
    peak = config.lr
    warmup = round_half_up(config.warmup_fraction * total)
    if t < warmup:
        return peak * t / float(warmup)
    span = total - warmup
    if span == 0:
        return peak
    progress = (t - warmup) / float(span)
    if config.schedule == 'cosine_restarts':
        cycles = config.restart_cycles
        position = (t - warmup) * cycles / float(span)
        cycle = min(int(math.floor(position)), cycles - 1)
        progress = position - cycle
    return peak * 0.5 * (1.0 + math.cos(math.pi * progress))


class AdamState(object):

    def __init__(self, params):
        self.m = collections.OrderedDict(
            (name, np.zeros_like(value)) for name, value in params.items())
        self.v = collections.OrderedDict(
            (name, np.zeros_like(value)) for name, value in params.items())
        self.step = 0
        self.skipped = 0

    def save(self, path):
        tensors = collections.OrderedDict()
        for name in self.m:
            tensors['adam.m.' + name] = self.m[name]
            tensors['adam.v.' + name] = self.v[name]
        tensors['adam.step'] = np.array([self.step], dtype=np.float32)
        tensors['adam.skipped'] = np.array([self.skipped], dtype=np.float32)
        write_archive(path, tensors)

    @classmethod
    def load(cls, path, params):
        tensors = read_archive(path)
        state = cls(params)
        for name in params:
            for moments, prefix in ((state.m, 'adam.m.'),
                                    (state.v, 'adam.v.')):
                key = prefix + name
                if key not in tensors:
                    raise ArchiveError('missing optimizer tensor', key)
                if tensors[key].shape != params[name].shape:
                    raise ArchiveError('shape %r does not match %r'
                                       % (tensors[key].shape,
                                          params[name].shape), key)
                moments[name] = tensors[key].astype(params[name].dtype)
        state.step = int(tensors['adam.step'][0])
        state.skipped = int(tensors['adam.skipped'][0])
        return state


def adam_step(params, grads, state, lr, config):
    """
    One bias-corrected Adam update, in place. A gradient with a non-finite
    entry skips the step and increments ``state.skipped``.
    """
    for name, grad in grads.items():
        if grad.shape != params[name].shape:
            raise ContractError('gradient of shape %r for %s of shape %r'
                                % (grad.shape, name, params[name].shape))
    if not all(np.all(np.isfinite(g)) for g in grads.values()):
        state.skipped += 1
        logger.warning('skipped Adam step %d: non-finite gradient',
                       state.step + 1)
        return params, state

    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name, grad in grads.items():
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * grad
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * grad * grad
        update = lr * (m / correction1) / (np.sqrt(v / correction2)
                                           + config.adam_eps)
        params[name] -= update.astype(params[name].dtype)
    return params, state


def clip_gradients(grads, max_norm):
    if not max_norm:
        return grads
    norm = grads.global_norm()
    if norm > max_norm:
        scale = max_norm / norm
        for name in grads:
            grads[name] = grads[name] * scale
    return grads


class SubsampleSpec(object):

    def __init__(self, fraction, total, retained, zeroed=()):
        self.fraction = fraction
        self.total = total
        self.retained = retained
        self.zeroed = list(zeroed)

    def __repr__(self):
        return '<SubsampleSpec %.4f: %d of %d>' % (
            self.fraction, self.retained, self.total)


def subsample(train, fraction):
    """
    Keep round(fraction * |train|) examples by repeatedly dropping the
    latest example of the relation with the most remaining examples (ties
    go to the smallest relation id). Returns the retained examples in
    their original order and a SubsampleSpec.
    """
    if not 0 < fraction <= 1:
        raise ContractError('fraction %r outside (0, 1]' % fraction)
    total = len(train)
    target = max(1, round_half_up(fraction * total))
    if target >= total:
        return list(train), SubsampleSpec(fraction, total, total)

    by_relation = collections.OrderedDict()
    for i, example in enumerate(train):
        by_relation.setdefault(example.gold_relation, []).append(i)
    heap = [(-len(indices), relation)
            for relation, indices in by_relation.items()]
    heapq.heapify(heap)

    removed = set()
    zeroed = []
    for _ in range(total - target):
        count, relation = heapq.heappop(heap)
        removed.add(by_relation[relation].pop())
        if count + 1 < 0:
            heapq.heappush(heap, (count + 1, relation))
        else:
            zeroed.append(relation)
    if zeroed:
        logger.warning('subsampling to %d examples removed every example '
                       'of %d relations: %s', target, len(zeroed),
                       ', '.join(sorted(zeroed)))
    retained = [example for i, example in enumerate(train)
                if i not in removed]
    return retained, SubsampleSpec(fraction, total, len(retained), zeroed)


def relation_vocabulary(examples):
    return sorted(set(example.gold_relation for example in examples))


def _features(model, examples):
    features = []
    skipped = collections.Counter()
    for example in examples:
        tq = model.tokenize(example.question)
        targets, reason = targets_for(example, tq, model.relation_index)
        if targets is None:
            skipped[reason] += 1
        else:
            features.append((tq, targets))
    return features, skipped


class TrainResult(object):

    def __init__(self, model, log, best_epoch, best_score, state, skipped):
        self.model = model
        self.log = log
        self.best_epoch = best_epoch
        self.best_score = best_score
        self.state = state
        self.skipped = skipped


def _write_log(path, log):
    with atomic_open(path) as f:
        for record in log:
            f.write(u'%s\n' % json.dumps(record, sort_keys=True))


def _append_log(path, record):
    with io.open(path, 'a', encoding='utf-8') as f:
        f.write(u'%s\n' % json.dumps(record, sort_keys=True))


def train(model, dataset, config, dev=None, log_path=None,
          checkpoint_dir=None):
    """
    Train ``model`` in place on ``dataset``. Each epoch visits the examples
    in a seeded random order, in mini-batches whose gradients are averaged
    in a fixed order. After every epoch the dev set (when given) is scored
    and the weights with the best span accuracy + relation accuracy are
    kept; they are in ``model`` when this returns. The log at ``log_path``
    gains one JSON line as each epoch ends.
    """
    from .evaluate import component_report

    features, skipped = _features(model, dataset)
    if skipped:
        logger.info('skipping %d training examples: %s',
                    sum(skipped.values()), dict(skipped))
    if not features:
        raise TrainingError('no trainable examples among %d (%s)'
                            % (len(dataset), dict(skipped)))

    steps_per_epoch = int(math.ceil(len(features) / float(config.batch_size)))
    total = steps_per_epoch * config.epochs
    shuffle = random_stream(config.seed, 'shuffle')
    state = AdamState(model.params)
    params = model.params

    log = []
    if log_path:
        _write_log(log_path, [])
    best = (None, -1.0, None)
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = shuffle.permutation(len(features))
        epoch_loss = 0.0
        lr = 0.0
        for first in range(0, len(order), config.batch_size):
            batch = order[first:first + config.batch_size]
            grads = None
            batch_loss = 0.0
            for i in batch:
                tq, targets = features[i]
                loss, example_grads = model.loss_and_gradients(
                    tq, targets, config.loss_weights)
                batch_loss += loss.value
                grads = example_grads if grads is None else \
                    grads.add(example_grads)
            for name in grads:
                grads[name] = grads[name] / float(len(batch))
            clip_gradients(grads, config.clip_norm)
            lr = lr_at(step, total, config)
            adam_step(params, grads, state, lr, config)
            step += 1
            epoch_loss += batch_loss

        record = collections.OrderedDict([
            ('epoch', epoch), ('step', step), ('lr', lr),
            ('loss', epoch_loss / len(features))])
        score = -record['loss']
        if dev is not None:
            report = component_report(model, dev)
            record['dev_span_acc'] = report.span_accuracy
            record['dev_rel_acc'] = report.relation_accuracy
            record['dev_avg_f1'] = report.avg_f1
            score = report.span_accuracy + report.relation_accuracy
        log.append(record)
        if log_path:
            _append_log(log_path, record)
        logger.info('epoch %d: %s', epoch, json.dumps(record))

        if checkpoint_dir:
            prefix = os.path.join(checkpoint_dir, 'checkpoint-%03d' % epoch)
            write_archive(prefix + '.bin', params)
            state.save(prefix + '.adam.bin')
        if best[0] is None or score > best[1]:
            best = (epoch, score, params.copy())

    model.params = best[2]
    return TrainResult(model, log, best[0], best[1], state, skipped)
