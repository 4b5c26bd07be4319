"""
Task heads on the encoder outputs: start/end classifiers for the entity
span, a relation classifier on the [CLS] vector, their joint cross-entropy
loss, and the QAModel that bundles encoder, heads and vocabularies.
"""
import collections
import io
import logging
import os

import numpy as np
from scipy import special

from . import encoder
from .config import read_key_values, write_key_values
from .exceptions import ConfigError, ContractError
from .textproc import load_vocab, mask_span, span_piece_mask, tokenize
from .utils import atomic_open


logger = logging.getLogger(__name__)

START = 'head.start'
END = 'head.end'
RELATION = 'head.rel'

ABLATIONS = ('none', 'attention', 'token')


def head_shapes(config):
    return collections.OrderedDict([
        (START, (config.d_model,)),
        (END, (config.d_model,)),
        (RELATION, (config.relations, config.d_model)),
    ])


class SpanHead(object):

    def __init__(self, params):
        self.w_start = params[START]
        self.w_end = params[END]


class RelationHead(object):

    def __init__(self, params):
        self.weights = params[RELATION]


class SpanPrediction(object):

    def __init__(self, piece_start, piece_end, word_start, word_end):
        self.piece_start = piece_start
        self.piece_end = piece_end
        self.word_start = word_start
        self.word_end = word_end
        self.start_word, self.end_word = decode_span(word_start, word_end)

    @property
    def span(self):
        return (self.start_word, self.end_word)

    def __repr__(self):
        return '<SpanPrediction %d..%d>' % self.span


def _piece_distribution(outputs, positions, w):
    dist = np.zeros(outputs.shape[0])
    dist[positions] = special.softmax(outputs[positions] @ w)
    return dist


def _word_distribution(tq, piece_dist):
    positions = tq.content_positions
    return np.bincount(tq.word_index[positions],
                       weights=piece_dist[positions],
                       minlength=len(tq.words))


def predict_span(trace, head):
    """
    Start/end distributions over the word pieces (special pieces excluded),
    summed into distributions over words, and the decoded word span.
    """
    tq = trace.tq
    positions = tq.content_positions
    piece_start = _piece_distribution(trace.outputs, positions, head.w_start)
    piece_end = _piece_distribution(trace.outputs, positions, head.w_end)
    return SpanPrediction(piece_start, piece_end,
                          _word_distribution(tq, piece_start),
                          _word_distribution(tq, piece_end))


def predict_relation(trace, head):
    return special.softmax(head.weights @ trace.outputs[0])


def decode_span(word_start_dist, word_end_dist):
    """
    Argmax start and end; when the end falls before the start, the pair
    s <= e with the highest p_start(s) * p_end(e).
    """
    start = int(np.argmax(word_start_dist))
    end = int(np.argmax(word_end_dist))
    if start <= end:
        return start, end
    joint = np.triu(np.outer(word_start_dist, word_end_dist))
    start, end = np.unravel_index(int(np.argmax(joint)), joint.shape)
    return int(start), int(end)


class LossTargets(object):
    """
    Piece-level training targets: the first piece of the first gold word,
    the last piece of the last gold word, and the relation row.
    """

    def __init__(self, start_piece, end_piece, relation, span_words):
        self.start_piece = start_piece
        self.end_piece = end_piece
        self.relation = relation
        self.span_words = span_words


SKIP_UNSOLVABLE = 'unsolvable'
SKIP_TRUNCATED = 'truncated'
SKIP_RELATION = 'unknown_relation'


def targets_for(example, tq, relation_index):
    """
    Returns (targets, None) or (None, reason) for examples that cannot be
    trained on.
    """
    if not example.solvable:
        return None, SKIP_UNSOLVABLE
    start_word, end_word = example.gold_span
    if end_word >= len(tq.words):
        return None, SKIP_TRUNCATED
    relation = relation_index.get(example.gold_relation)
    if relation is None:
        return None, SKIP_RELATION
    word_index = tq.word_index
    start_piece = int(np.flatnonzero(word_index == start_word)[0])
    end_piece = int(np.flatnonzero(word_index == end_word)[-1])
    return LossTargets(start_piece, end_piece, relation,
                       (start_word, end_word)), None


class JointLoss(object):
    """
    Loss value and its gradients with respect to the three sets of logits.
    """

    def __init__(self, value, components, d_start, d_end, d_relation):
        self.value = value
        self.components = components
        self.d_start = d_start
        self.d_end = d_end
        self.d_relation = d_relation


def _cross_entropy(dist, target, positions=None):
    if positions is not None:
        probs = dist[positions]
        index = int(np.flatnonzero(positions == target)[0])
    else:
        probs, index = dist, target
    with np.errstate(divide='ignore'):
        value = -float(np.log(probs[index]))
    grad = probs.copy()
    grad[index] -= 1.0
    return value, grad


def joint_loss(span_pred, rel_dist, targets, positions,
               weights=(1.0, 1.0, 1.0)):
    """
    Weighted sum of start, end and relation cross-entropies. ``positions``
    are the piece positions the span softmaxes ran over. Gradients are with
    respect to the logits of each softmax.
    """
    if targets.start_piece not in positions or \
            targets.end_piece not in positions:
        raise ContractError('span target outside the span softmax')
    w_start, w_end, w_rel = weights
    start, d_start = _cross_entropy(span_pred.piece_start,
                                    targets.start_piece, positions)
    end, d_end = _cross_entropy(span_pred.piece_end, targets.end_piece,
                                positions)
    rel, d_rel = _cross_entropy(rel_dist, targets.relation)
    value = w_start * start + w_end * end + w_rel * rel
    return JointLoss(value, (start, end, rel), w_start * d_start,
                     w_end * d_end, w_rel * d_rel)


def heads_backward(loss, trace, params, positions, relation_trace=None):
    """
    Push the logit gradients of ``loss`` through the head weights into the
    encoder. The relation logits come from ``relation_trace`` when the
    entity-mask ablation ran a separate pass.
    """
    if relation_trace is None:
        relation_trace = trace
    d_outputs = np.zeros_like(trace.outputs)
    d_outputs[positions] += (np.outer(loss.d_start, params[START])
                             + np.outer(loss.d_end, params[END]))
    d_relation_outputs = np.zeros_like(relation_trace.outputs)
    d_relation_outputs[0] += params[RELATION].T @ loss.d_relation

    if relation_trace is trace:
        grads = encoder.backward(trace, d_outputs + d_relation_outputs,
                                 params)
    else:
        grads = encoder.backward(trace, d_outputs, params)
        grads.add(encoder.backward(relation_trace, d_relation_outputs,
                                   params))

    outputs = trace.outputs[positions]
    grads[START] = grads[START] + outputs.T @ loss.d_start
    grads[END] = grads[END] + outputs.T @ loss.d_end
    grads[RELATION] = grads[RELATION] + np.outer(
        loss.d_relation, relation_trace.outputs[0])
    return grads


class Prediction(object):

    def __init__(self, tq, trace, span, relation_dist, relation_trace=None):
        self.tq = tq
        self.trace = trace
        self.span = span
        self.relation_dist = relation_dist
        self.relation_trace = (trace if relation_trace is None
                               else relation_trace)

    @property
    def span_words(self):
        return self.span.span

    @property
    def span_text(self):
        return self.tq.span_text(*self.span.span)


class QAModel(object):
    """
    Encoder parameters with the task heads, the WordPiece vocabulary and
    the relation vocabulary whose order matches the rows of head.rel.
    """

    def __init__(self, params, vocab, relations, ablation='none'):
        if ablation not in ABLATIONS:
            raise ConfigError('must be one of %s' % ', '.join(ABLATIONS),
                              'entity_mask_ablation')
        if len(relations) != params.config.relations:
            raise ConfigError('%d relations for %d relation rows'
                              % (len(relations), params.config.relations),
                              'relations')
        self.params = params
        self.vocab = vocab
        self.relations = list(relations)
        self.relation_index = dict((r, i) for i, r in
                                   enumerate(self.relations))
        self.ablation = ablation

    @property
    def config(self):
        return self.params.config

    def tokenize(self, question):
        return tokenize(question, self.vocab,
                        max_length=self.config.max_positions)

    def relation_pass(self, tq, span_words):
        """
        Forward pass that relation prediction reads from, honouring the
        entity-mask ablation for the given word span.
        """
        if self.ablation == 'attention':
            return encoder.forward(tq, self.params,
                                   mask=span_piece_mask(tq, *span_words))
        if self.ablation == 'token':
            masked = mask_span(tq, span_words[0], span_words[1], self.vocab)
            return encoder.forward(masked, self.params)
        return None

    def predict(self, tq):
        trace = encoder.forward(tq, self.params)
        span = predict_span(trace, SpanHead(self.params))
        relation_trace = self.relation_pass(tq, span.span)
        if relation_trace is None:
            relation_trace = trace
        relation_dist = predict_relation(relation_trace,
                                         RelationHead(self.params))
        return Prediction(tq, trace, span, relation_dist, relation_trace)

    def loss_and_gradients(self, tq, targets, weights=(1.0, 1.0, 1.0)):
        trace = encoder.forward(tq, self.params)
        span = predict_span(trace, SpanHead(self.params))
        relation_trace = self.relation_pass(tq, targets.span_words)
        if relation_trace is None:
            relation_trace = trace
        relation_dist = predict_relation(relation_trace,
                                         RelationHead(self.params))
        positions = tq.content_positions
        loss = joint_loss(span, relation_dist, targets, positions, weights)
        grads = heads_backward(loss, trace, self.params, positions,
                               relation_trace)
        return loss, grads

    def relation_ranking(self, relation_dist):
        """Relation id to probability."""
        return dict(zip(self.relations, relation_dist.tolist()))


def new_model(model_config, vocab, relations, rng, ablation='none'):
    """
    Fresh model; vocabulary and relation counts in ``model_config`` are
    overridden by the given vocabularies.
    """
    obj = model_config.to_dict()
    obj['vocab_size'] = len(vocab)
    obj['relations'] = len(relations)
    params = encoder.init_params(encoder.ModelConfig(obj), rng)
    return QAModel(params, vocab, relations, ablation)


WEIGHTS_FILE = 'weights.bin'
VOCAB_FILE = 'vocab.txt'
RELATIONS_FILE = 'relations.txt'
CONFIG_FILE = 'model.conf'


def save_model(model, directory):
    if not os.path.isdir(directory):
        os.makedirs(directory)
    encoder.save_weights(model.params, os.path.join(directory, WEIGHTS_FILE))
    model.vocab.save(os.path.join(directory, VOCAB_FILE))
    with atomic_open(os.path.join(directory, RELATIONS_FILE)) as f:
        for relation in model.relations:
            f.write(relation + u'\n')
    obj = model.config.to_dict()
    obj['entity_mask_ablation'] = model.ablation
    write_key_values(os.path.join(directory, CONFIG_FILE), obj)


def _typed(value):
    if value in ('true', 'false'):
        return value == 'true'
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def load_model(directory, weights=None):
    """
    Load a model directory; ``weights`` optionally names another weight
    archive of the same shapes (e.g. a checkpoint).
    """
    obj = dict((key, _typed(value)) for key, value in
               read_key_values(os.path.join(directory, CONFIG_FILE)).items())
    ablation = obj.pop('entity_mask_ablation', 'none')
    config = encoder.ModelConfig(obj)
    params = encoder.load_weights(
        weights or os.path.join(directory, WEIGHTS_FILE), config)
    vocab = load_vocab(os.path.join(directory, VOCAB_FILE))
    with io.open(os.path.join(directory, RELATIONS_FILE), 'r',
                 encoding='utf-8') as f:
        relations = [line.rstrip('\n') for line in f if line.strip()]
    return QAModel(params, vocab, relations, ablation)
