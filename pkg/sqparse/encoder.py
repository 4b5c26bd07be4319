"""
Transformer encoder over WordPiece sequences: embeddings, multi-head
self-attention and position-wise feedforward blocks with post-layer
normalization, a forward pass that keeps every intermediate tensor, and the
exact reverse-mode gradients of that pass.

Tensors are numpy arrays. A question is encoded on its own, so sequences are
(N, d_model) matrices; the heads of a layer are stacked on a leading axis.
"""
import collections
import logging

import numpy as np
from scipy import special, stats

from .archive import read_archive, write_archive
from .exceptions import (ArchiveError, ConfigError, ContractError,
                         SequenceLengthError)


logger = logging.getLogger(__name__)


class ModelConfig(object):

    def __init__(self, obj):
        self.layers = int(obj.get('layers', 2))
        self.heads = int(obj.get('heads', 2))
        self.d_model = int(obj.get('d_model', 64))
        self.d_ff = int(obj.get('d_ff', 4 * self.d_model))
        self.vocab_size = int(obj.get('vocab_size', 1))
        self.max_positions = int(obj.get('max_positions', 64))
        self.relations = int(obj.get('relations', 1))
        self.scale_attention = bool(obj.get('scale_attention', True))
        self.output_projection = bool(obj.get('output_projection', True))
        self.layer_norm = obj.get('layer_norm', 'post')
        self.init_std = float(obj.get('init_std', 0.02))
        self.norm_eps = float(obj.get('norm_eps', 1e-12))

        if self.layers < 0:
            raise ConfigError('must be >= 0', 'layers')
        for key in ('heads', 'd_model', 'd_ff', 'vocab_size',
                    'max_positions', 'relations'):
            if getattr(self, key) < 1:
                raise ConfigError('must be >= 1', key)
        if self.d_model % self.heads:
            raise ConfigError('d_model %d is not divisible by %d heads'
                              % (self.d_model, self.heads), 'd_model')
        if self.layer_norm != 'post':
            raise ConfigError('only post-layer normalization is supported',
                              'layer_norm')

    @property
    def d_head(self):
        return self.d_model // self.heads

    def to_dict(self):
        return collections.OrderedDict(
            (key, getattr(self, key)) for key in (
                'layers', 'heads', 'd_model', 'd_ff', 'vocab_size',
                'max_positions', 'relations', 'scale_attention',
                'output_projection', 'layer_norm', 'init_std', 'norm_eps'))

    def __repr__(self):
        return '<ModelConfig L=%d M=%d d=%d>' % (
            self.layers, self.heads, self.d_model)


def _layer(l, name):
    return 'layer.%d.%s' % (l, name)


def encoder_shapes(config):
    d, m, dh, dff = (config.d_model, config.heads, config.d_head,
                     config.d_ff)
    shapes = collections.OrderedDict([
        ('embed.token', (config.vocab_size, d)),
        ('embed.position', (config.max_positions, d)),
        ('embed.segment', (d,)),
        ('embed.norm.gain', (d,)),
        ('embed.norm.bias', (d,)),
    ])
    for l in range(config.layers):
        shapes[_layer(l, 'attention.query')] = (m, d, dh)
        shapes[_layer(l, 'attention.key')] = (m, d, dh)
        shapes[_layer(l, 'attention.value')] = (m, d, dh)
        if config.output_projection:
            shapes[_layer(l, 'attention.output')] = (d, d)
        shapes[_layer(l, 'attention.norm.gain')] = (d,)
        shapes[_layer(l, 'attention.norm.bias')] = (d,)
        shapes[_layer(l, 'ffn.w1')] = (d, dff)
        shapes[_layer(l, 'ffn.b1')] = (dff,)
        shapes[_layer(l, 'ffn.w2')] = (dff, d)
        shapes[_layer(l, 'ffn.b2')] = (d,)
        shapes[_layer(l, 'ffn.norm.gain')] = (d,)
        shapes[_layer(l, 'ffn.norm.bias')] = (d,)
    return shapes


def parameter_shapes(config):
    """Shapes of every tensor of the model, task heads included."""
    from .heads import head_shapes
    shapes = encoder_shapes(config)
    shapes.update(head_shapes(config))
    return shapes


class ModelParameters(collections.OrderedDict):
    """
    Every trainable tensor of the model by name, plus the config that fixes
    their shapes.
    """

    def __init__(self, config, tensors=()):
        super(ModelParameters, self).__init__(tensors)
        self.config = config

    def copy(self):
        return ModelParameters(
            self.config, ((name, value.copy()) for name, value in
                          self.items()))

    def astype(self, dtype):
        return ModelParameters(
            self.config, ((name, value.astype(dtype)) for name, value in
                          self.items()))

    def __reduce__(self):
        return (ModelParameters, (self.config, list(self.items())))


def _initial_value(name, shape, config, rng):
    leaf = name.rsplit('.', 1)[-1]
    if leaf == 'gain':
        return np.ones(shape, dtype=np.float32)
    if leaf in ('bias', 'b1', 'b2'):
        return np.zeros(shape, dtype=np.float32)
    values = stats.truncnorm.rvs(-2.0, 2.0, scale=config.init_std,
                                 size=shape, random_state=rng)
    return np.asarray(values, dtype=np.float32).reshape(shape)


def init_params(config, rng):
    """
    Truncated-normal weights (std ``init_std``), zero biases, unit
    layer-normalization gains, for the encoder and the task heads.
    """
    params = ModelParameters(config)
    for name, shape in parameter_shapes(config).items():
        params[name] = _initial_value(name, shape, config, rng)
    return params


class ParameterGradients(collections.OrderedDict):
    """
    Gradient per parameter tensor; ``inputs`` holds the gradient with
    respect to the embedding output x^1.
    """

    def __init__(self, params):
        super(ParameterGradients, self).__init__(
            (name, np.zeros_like(value)) for name, value in params.items())
        self.inputs = None

    def add(self, other):
        for name, value in other.items():
            self[name] += value
        return self

    def global_norm(self):
        return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64)))
                                 for g in self.values())))


def layer_norm(x, gain, bias, eps):
    mean = x.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + eps)
    normed = (x - mean) * inv_std
    return gain * normed + bias, (normed, inv_std)


def layer_norm_backward(dy, cache, gain):
    normed, inv_std = cache
    dnormed = dy * gain
    dx = inv_std * (dnormed - dnormed.mean(axis=-1, keepdims=True)
                    - normed * (dnormed * normed).mean(axis=-1,
                                                       keepdims=True))
    return dx, (dy * normed).sum(axis=0), dy.sum(axis=0)


def _attention_scale(config):
    return 1.0 / np.sqrt(config.d_head) if config.scale_attention else 1.0


def _embed(tq, params, config):
    n = len(tq)
    if n > config.max_positions:
        raise SequenceLengthError(
            'sequence of %d pieces exceeds %d positions'
            % (n, config.max_positions), n, config.max_positions)
    summed = (params['embed.token'][tq.piece_ids]
              + params['embed.position'][:n] + params['embed.segment'])
    out, cache = layer_norm(summed, params['embed.norm.gain'],
                            params['embed.norm.bias'], config.norm_eps)
    return out, cache


def embed(tq, params, config=None):
    return _embed(tq, params, config or params.config)[0]


def _masked(logits, mask):
    if mask is None:
        return logits
    return np.where(mask, logits, -np.inf)


def attention_scores(x, l, h, params, mask=None):
    """
    Logits a[i, j] = (x_i W_Q)·(x_j W_K) of head ``h`` in layer ``l``,
    scaled by 1/sqrt(d_head) when ``scale_attention`` is set; positions
    hidden by ``mask`` get -inf.
    """
    config = params.config
    query = x @ params[_layer(l, 'attention.query')][h]
    key = x @ params[_layer(l, 'attention.key')][h]
    return _masked((query @ key.T) * _attention_scale(config), mask)


def attention_weights(logits):
    """
    Row-wise softmax over the finite logits; -inf entries get weight 0.
    """
    if np.any(np.all(np.isneginf(logits), axis=-1)):
        raise ContractError('attention row with every target masked')
    return special.softmax(logits, axis=-1)


def _concat_heads(context):
    m, n, dh = context.shape
    return context.transpose(1, 0, 2).reshape(n, m * dh)


def attention_summarize(x, alpha, l, params):
    """
    Per head the alpha-weighted sum of the value projections of ``x``,
    concatenated over heads and passed through the output projection.
    ``alpha`` holds the (M, N, N) weights of layer ``l``.
    """
    values = np.einsum('nd,mde->mne', x, params[_layer(l, 'attention.value')])
    concat = _concat_heads(alpha @ values)
    if params.config.output_projection:
        return concat @ params[_layer(l, 'attention.output')]
    return concat


def position_feedforward(h, l, params):
    hidden = np.maximum(0, h @ params[_layer(l, 'ffn.w1')]
                        + params[_layer(l, 'ffn.b1')])
    return hidden @ params[_layer(l, 'ffn.w2')] + params[_layer(l, 'ffn.b2')]


class LayerTrace(object):
    """Activations of one transformer layer."""

    def __init__(self, inputs):
        self.inputs = inputs
        self.query = self.key = self.value = None
        self.logits = self.alpha = None
        self.concat = self.summary = None
        self.attention_norm = None
        self.attended = None
        self.ffn_pre = self.ffn_hidden = None
        self.ffn_norm = None
        self.outputs = None


class ForwardTrace(object):

    def __init__(self, tq, config, mask):
        self.tq = tq
        self.config = config
        self.mask = mask
        self.piece_ids = tq.piece_ids
        self.embed_norm = None
        self.layers = []
        self.outputs = None

    def __len__(self):
        return len(self.piece_ids)

    @property
    def inputs(self):
        """Layer inputs x^1 .. x^L."""
        return [layer.inputs for layer in self.layers]

    @property
    def embeddings(self):
        if self.layers:
            return self.layers[0].inputs
        return self.outputs

    @property
    def alphas(self):
        """Attention weights, shape (L, M, N, N)."""
        n = len(self)
        if not self.layers:
            return np.zeros((0, self.config.heads, n, n))
        return np.stack([layer.alpha for layer in self.layers])

    @property
    def logits(self):
        n = len(self)
        if not self.layers:
            return np.zeros((0, self.config.heads, n, n))
        return np.stack([layer.logits for layer in self.layers])

    @property
    def head_summaries(self):
        """h^l per layer, after the output projection."""
        return [layer.summary for layer in self.layers]


def _run_layer(x, l, params, config, mask):
    layer = LayerTrace(x)
    layer.query = np.einsum('nd,mde->mne', x,
                            params[_layer(l, 'attention.query')])
    layer.key = np.einsum('nd,mde->mne', x,
                          params[_layer(l, 'attention.key')])
    layer.value = np.einsum('nd,mde->mne', x,
                            params[_layer(l, 'attention.value')])
    layer.logits = _masked(
        (layer.query @ layer.key.transpose(0, 2, 1))
        * _attention_scale(config), mask)
    layer.alpha = attention_weights(layer.logits)
    layer.concat = _concat_heads(layer.alpha @ layer.value)
    if config.output_projection:
        layer.summary = layer.concat @ params[_layer(l, 'attention.output')]
    else:
        layer.summary = layer.concat

    layer.attended, layer.attention_norm = layer_norm(
        x + layer.summary, params[_layer(l, 'attention.norm.gain')],
        params[_layer(l, 'attention.norm.bias')], config.norm_eps)

    layer.ffn_pre = (layer.attended @ params[_layer(l, 'ffn.w1')]
                     + params[_layer(l, 'ffn.b1')])
    layer.ffn_hidden = np.maximum(0, layer.ffn_pre)
    ffn_out = (layer.ffn_hidden @ params[_layer(l, 'ffn.w2')]
               + params[_layer(l, 'ffn.b2')])
    layer.outputs, layer.ffn_norm = layer_norm(
        layer.attended + ffn_out, params[_layer(l, 'ffn.norm.gain')],
        params[_layer(l, 'ffn.norm.bias')], config.norm_eps)
    return layer


def forward(tq, params, config=None, mask=None):
    """
    Encode ``tq``. ``mask`` is an optional boolean vector over pieces; False
    hides a piece as an attention target in every layer and head (queries
    at that position are still computed).
    """
    config = config or params.config
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (len(tq),):
            raise ContractError('mask of shape %r for %d pieces'
                                % (mask.shape, len(tq)))
    trace = ForwardTrace(tq, config, mask)
    x, trace.embed_norm = _embed(tq, params, config)
    for l in range(config.layers):
        layer = _run_layer(x, l, params, config, mask)
        trace.layers.append(layer)
        x = layer.outputs
    trace.outputs = x
    return trace


def _layer_backward(dout, l, layer, params, config, grads):
    dres, grads[_layer(l, 'ffn.norm.gain')], \
        grads[_layer(l, 'ffn.norm.bias')] = layer_norm_backward(
            dout, layer.ffn_norm, params[_layer(l, 'ffn.norm.gain')])

    grads[_layer(l, 'ffn.w2')] = layer.ffn_hidden.T @ dres
    grads[_layer(l, 'ffn.b2')] = dres.sum(axis=0)
    dpre = (dres @ params[_layer(l, 'ffn.w2')].T) * (layer.ffn_pre > 0)
    grads[_layer(l, 'ffn.w1')] = layer.attended.T @ dpre
    grads[_layer(l, 'ffn.b1')] = dpre.sum(axis=0)
    dattended = dres + dpre @ params[_layer(l, 'ffn.w1')].T

    dres, grads[_layer(l, 'attention.norm.gain')], \
        grads[_layer(l, 'attention.norm.bias')] = layer_norm_backward(
            dattended, layer.attention_norm,
            params[_layer(l, 'attention.norm.gain')])

    if config.output_projection:
        grads[_layer(l, 'attention.output')] = layer.concat.T @ dres
        dconcat = dres @ params[_layer(l, 'attention.output')].T
    else:
        dconcat = dres
    n = dconcat.shape[0]
    dcontext = dconcat.reshape(n, config.heads, config.d_head).transpose(
        1, 0, 2)

    alpha = layer.alpha
    dalpha = dcontext @ layer.value.transpose(0, 2, 1)
    dvalue = alpha.transpose(0, 2, 1) @ dcontext
    dlogits = alpha * (dalpha - (dalpha * alpha).sum(axis=-1, keepdims=True))
    dlogits = dlogits * _attention_scale(config)
    dquery = dlogits @ layer.key
    dkey = dlogits.transpose(0, 2, 1) @ layer.query

    x = layer.inputs
    dx = dres
    for name, dproj in (('attention.query', dquery), ('attention.key', dkey),
                        ('attention.value', dvalue)):
        grads[_layer(l, name)] = np.einsum('nd,mne->mde', x, dproj)
        dx = dx + np.einsum('mne,mde->nd', dproj, params[_layer(l, name)])
    return dx


def backward(trace, output_gradients, params):
    """
    Gradients of a scalar loss with respect to every parameter, given its
    gradient with respect to the final outputs of ``trace``. Head tensors
    are left at zero; ``heads.joint_loss`` fills them in.
    """
    output_gradients = np.asarray(output_gradients)
    if output_gradients.shape != trace.outputs.shape:
        raise ContractError('output gradient of shape %r for outputs of %r'
                            % (output_gradients.shape, trace.outputs.shape))
    config = trace.config
    grads = ParameterGradients(params)

    dx = output_gradients
    for l in reversed(range(len(trace.layers))):
        dx = _layer_backward(dx, l, trace.layers[l], params, config, grads)
    grads.inputs = dx

    dsum, grads['embed.norm.gain'], grads['embed.norm.bias'] = \
        layer_norm_backward(dx, trace.embed_norm, params['embed.norm.gain'])
    np.add.at(grads['embed.token'], trace.piece_ids, dsum)
    grads['embed.position'][:len(trace)] += dsum
    grads['embed.segment'] += dsum.sum(axis=0)
    return grads


def save_weights(params, path):
    write_archive(path, params)


def load_weights(path, config):
    """
    Read an archive and check it against ``config``: every expected tensor
    present with its exact shape, nothing else.
    """
    tensors = read_archive(path)
    expected = parameter_shapes(config)
    unknown = [name for name in tensors if name not in expected]
    if unknown:
        raise ArchiveError('unknown tensors: %s' % ', '.join(unknown))
    missing = [name for name in expected if name not in tensors]
    if missing:
        raise ArchiveError('missing tensors: %s' % ', '.join(missing))
    params = ModelParameters(config)
    for name, shape in expected.items():
        if tensors[name].shape != tuple(shape):
            raise ArchiveError('shape %r does not match expected %r'
                               % (tensors[name].shape, tuple(shape)), name)
        params[name] = tensors[name]
    return params
