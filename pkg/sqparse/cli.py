"""
Command-line entry point: ``sqparse <command> [options]``.
"""
import argparse
import json
import logging
import os
import sys

from . import evaluate
from .config import RunConfig, parse_override
from .encoder import ModelConfig
from .exceptions import SQParseError
from .heads import load_model, new_model, save_model
from .kgstore import load_dataset, load_graph, load_lexicon, write_dataset
from .linker import build_index, load_index, save_index
from .nodes import NoAnswer
from .qanswer import answer
from .textproc import load_vocab
from .toydata import generate_corpus
from .trainer import TrainConfig, relation_vocabulary, subsample, train
from .utils import random_stream


logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_NO_ANSWER = 2

METRICS_FILE = 'metrics.jsonl'
OPTIMIZER_FILE = 'optimizer.bin'


def _print_json(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + '\n')


def _graph(config):
    graph = load_graph(config.path('triples'))
    return load_lexicon(config.path('lexicon'), graph)


def _index(config, graph):
    path = config.path('index')
    if os.path.exists(path):
        return load_index(path)
    logger.info('no index snapshot at %s, building one', path)
    return build_index(graph)


def _model_config(config):
    return ModelConfig(config.model_options())


def cmd_gen_toy(args, config):
    corpus = generate_corpus(config['seed'], args.entities, args.relations,
                             args.questions)
    corpus.write(args.out or config.data_dir())


def cmd_build_index(args, config):
    index = build_index(_graph(config))
    save_index(index, config.path('index'))


def cmd_train(args, config):
    graph = _graph(config)
    train_set = load_dataset(config.path('train'), graph)
    dev_set = load_dataset(config.path('dev'), graph)
    vocab = load_vocab(config.path('vocab'))
    train_config = TrainConfig(config.train_options())
    model = new_model(_model_config(config), vocab,
                      relation_vocabulary(train_set),
                      random_stream(config['seed'], 'init'),
                      train_config.entity_mask_ablation)

    model_dir = config.path('model_dir')
    checkpoints = os.path.join(model_dir, 'checkpoints') \
        if args.checkpoints else None
    if checkpoints and not os.path.isdir(checkpoints):
        os.makedirs(checkpoints)
    result = train(model, train_set, train_config, dev=dev_set,
                   log_path=os.path.join(model_dir, METRICS_FILE),
                   checkpoint_dir=checkpoints)
    save_model(result.model, model_dir)
    result.state.save(os.path.join(model_dir, OPTIMIZER_FILE))
    config.save(os.path.join(model_dir, 'run.conf'))
    logger.info('best epoch %d (dev score %.4f), model saved to %s',
                result.best_epoch, result.best_score, model_dir)


def cmd_eval(args, config):
    graph = _graph(config)
    dataset = load_dataset(config.path(args.split), graph)
    model = load_model(config.path('model_dir'))
    report = evaluate.evaluate(model, dataset, _index(config, graph),
                               graph, config['top_k'], config['recall_at'],
                               config['stop_words'])
    record = report.record()
    record['split'] = args.split
    _print_json(record)


def cmd_answer(args, config):
    graph = _graph(config)
    model = load_model(config.path('model_dir'))
    result = answer(args.question, model, _index(config, graph), graph,
                    config['top_k'], config['stop_words'])
    _print_json(result.record())
    if isinstance(result, NoAnswer):
        return EXIT_NO_ANSWER


def cmd_subsample(args, config):
    graph = _graph(config)
    train_set = load_dataset(config.path('train'), graph)
    retained, spec = subsample(train_set, args.fraction)
    write_dataset(retained, args.out)
    _print_json({'fraction': spec.fraction, 'total': spec.total,
                 'retained': spec.retained, 'zeroed': spec.zeroed})


def _attention_outputs(signature, prefix, heatmap):
    signature.to_csv(prefix + '.csv')
    if heatmap:
        signature.display().heatmap(prefix + '.png')


def cmd_attention(args, config):
    model_dir = config.path('model_dir')
    if bool(args.before) != bool(args.after):
        raise SQParseError('--before and --after go together')
    if args.before:
        before, after = evaluate.compare_signatures(
            args.question, load_model(model_dir, args.before),
            load_model(model_dir, args.after))
        outputs = ((before, args.out + '.before'),
                   (after, args.out + '.after'))
    else:
        model = load_model(model_dir)
        trace = model.predict(model.tokenize(args.question)).trace
        outputs = ((evaluate.attention_signature(trace), args.out),)
    for signature, prefix in outputs:
        _attention_outputs(signature, prefix, args.heatmap)
        _print_json({'csv': prefix + '.csv', 'tokens': signature.labels,
                     'cls': evaluate.cls_attention_row(signature).tolist()})


def cmd_limited_data(args, config):
    graph = _graph(config)
    train_set = load_dataset(config.path('train'), graph)
    dev_set = load_dataset(config.path('dev'), graph)
    fractions = args.fractions or config['fractions']
    cells = evaluate.limited_data_run(
        fractions, train_set, dev_set, load_vocab(config.path('vocab')),
        _model_config(config), TrainConfig(config.train_options()),
        config.path('results'))
    for cell in cells:
        _print_json(cell.record())


def _fractions(text):
    return [float(v) for v in text.split(',') if v.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog='sqparse',
        description='Answer simple questions over a knowledge graph.')
    parser.add_argument('--config', help='key=value configuration file')
    parser.add_argument('--set', dest='overrides', action='append',
                        default=[], metavar='KEY=VALUE',
                        help='override one configuration key')
    parser.add_argument('-v', '--verbose', action='store_true')
    parser.add_argument('-q', '--quiet', action='store_true')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    p = commands.add_parser('gen-toy', help='generate a synthetic corpus')
    p.add_argument('--entities', type=int, default=200)
    p.add_argument('--relations', type=int, default=20)
    p.add_argument('--questions', type=int, default=2000)
    p.add_argument('--out', help='output directory (default: data_dir)')
    p.set_defaults(func=cmd_gen_toy)

    p = commands.add_parser('build-index', help='snapshot the name index')
    p.set_defaults(func=cmd_build_index)

    p = commands.add_parser('train', help='train a model')
    p.add_argument('--checkpoints', action='store_true',
                   help='keep a weight and optimizer archive per epoch')
    p.set_defaults(func=cmd_train)

    p = commands.add_parser('eval', help='evaluate a trained model')
    p.add_argument('--split', choices=('dev', 'test'), default='dev')
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser('answer', help='answer one question')
    p.add_argument('question')
    p.set_defaults(func=cmd_answer)

    p = commands.add_parser('subsample', help='write a training subsample')
    p.add_argument('--fraction', type=float, required=True)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_subsample)

    p = commands.add_parser('attention', help='export attention signatures')
    p.add_argument('--question', required=True)
    p.add_argument('--out', required=True, help='output path prefix')
    p.add_argument('--before', help='weight archive before training')
    p.add_argument('--after', help='weight archive after training')
    p.add_argument('--heatmap', action='store_true',
                   help='also render PNG heatmaps')
    p.set_defaults(func=cmd_attention)

    p = commands.add_parser('limited-data',
                            help='train and score on training fractions')
    p.add_argument('--fractions', type=_fractions,
                   help='comma-separated fractions (default: config)')
    p.set_defaults(func=cmd_limited_data)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format='%(asctime)s %(levelname)s %(name)s: '
                               '%(message)s')
    try:
        config = RunConfig.load(
            args.config, [parse_override(o) for o in args.overrides])
        return args.func(args, config) or 0
    except (SQParseError, IOError, OSError) as e:
        sys.stderr.write('error: %s: %s\n' % (type(e).__name__, e))
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
