"""
From a question to an answer: span and relation prediction, entity
candidates for the span, re-ranking of entity-relation pairs and the graph
lookup; plus the taxonomy of wrong answers.
"""
import logging

from .exceptions import ContractError, NoAnswerError
from .kgstore import lookup_answers
from .linker import DEFAULT_LIMIT, STOP_WORDS, generate_candidates
from .nodes import Answer, ErrorBreakdown, LogicalForm, NoAnswer, value_for


logger = logging.getLogger(__name__)

ALTERNATIVES = 5


def best_relation(entity, relation_probs, graph):
    """
    Most probable relation among the outgoing relations of ``entity``
    (smallest id on ties); None when the entity has none.
    """
    outgoing = graph.outgoing_relations(entity)
    if not outgoing:
        return None
    return min(outgoing, key=lambda r: (-relation_probs.get(r, 0.0), r))


def select_logical_form(candidates, relation_probs, graph):
    """
    Pair every candidate with its best connected relation and rank the
    pairs by similarity, relation probability, entity in-degree and entity
    id. ``relation_probs`` maps relation ids to probabilities; relations
    outside it count as probability 0.
    """
    if not candidates:
        raise NoAnswerError(NoAnswer.NO_CANDIDATES, 'no entity candidates')
    forms = []
    for candidate in candidates:
        relation = best_relation(candidate.entity, relation_probs, graph)
        if relation is None:
            continue
        forms.append(LogicalForm({
            'entity': candidate.entity,
            'relation': relation,
            'similarity': candidate.similarity,
            'probability': relation_probs.get(relation, 0.0),
            'in_degree': graph.in_degree(candidate.entity),
        }))
    if not forms:
        raise NoAnswerError(NoAnswer.NO_LOGICAL_FORM,
                            'no candidate has an outgoing relation')
    forms.sort(key=LogicalForm.sort_key)
    return forms


class Analysis(object):
    """
    Everything computed for one question: the model prediction, the
    candidate list and the final answer.
    """

    def __init__(self, prediction, candidates, result):
        self.prediction = prediction
        self.candidates = candidates
        self.result = result


def resolve(question, prediction, candidates, model, graph, k):
    span = prediction.span_text
    base = {'question': question, 'span': span,
            'span_words': list(prediction.span_words)}
    try:
        forms = select_logical_form(
            candidates[:k], model.relation_ranking(prediction.relation_dist),
            graph)
    except NoAnswerError as e:
        logger.debug('no answer for %r: %s', question, e)
        base['reason'] = e.reason
        return NoAnswer(base)
    top = forms[0]
    base['form'] = top
    base['objects'] = [value_for(obj, graph) for obj in
                       lookup_answers(top.entity, top.relation, graph)]
    base['alternatives'] = forms[:ALTERNATIVES]
    return Answer(base)


def analyze(question, model, index, graph, k=DEFAULT_LIMIT,
            stop_words=STOP_WORDS, retrieve=None):
    """
    ``retrieve`` (>= k) is how many candidates to keep for recall
    measurements; only the first ``k`` take part in the answer.
    """
    prediction = model.predict(model.tokenize(question))
    candidates = generate_candidates(prediction.span_text, index, graph,
                                     max(k, retrieve or k), stop_words)
    result = resolve(question, prediction, candidates, model, graph, k)
    return Analysis(prediction, candidates, result)


def answer(question, model, index, graph, k=DEFAULT_LIMIT,
           stop_words=STOP_WORDS):
    """
    Answer node for ``question``, or a NoAnswer node with a reason code.
    """
    return analyze(question, model, index, graph, k, stop_words).result


class QuestionParser(object):

    def __init__(self, model, index, graph, k=DEFAULT_LIMIT,
                 stop_words=STOP_WORDS):
        self.model = model
        self.index = index
        self.graph = graph
        self.k = k
        self.stop_words = stop_words

    def parse(self, question):
        return answer(question, self.model, self.index, self.graph, self.k,
                      self.stop_words)


def parse(question, parser):
    return parser.parse(question)


def _pair(prediction):
    if isinstance(prediction, (tuple, list)):
        return tuple(prediction)
    if hasattr(prediction, 'gold_subject'):
        return (prediction.gold_subject, prediction.gold_relation)
    return (prediction.entity, prediction.relation)


def _ids(candidates):
    return set(getattr(c, 'entity', c) for c in candidates)


def _share(part, whole):
    return part / float(whole) if whole else None


def categorize_errors(predictions, golds, candidate_sets):
    """
    Predictions and golds are (entity, relation) pairs, Answer/NoAnswer
    nodes or QAExamples; candidate sets are lists of Candidates or ids.
    """
    if not len(predictions) == len(golds) == len(candidate_sets):
        raise ContractError('unaligned predictions, golds and candidates')
    counts = {'both': 0, 'entity_only': 0, 'relation_only': 0}
    misses = {'both': 0, 'entity_only': 0, 'relation_only': 0}
    relation_wrong = {True: 0, False: 0}
    retrieved = {True: 0, False: 0}
    for prediction, gold, candidates in zip(predictions, golds,
                                            candidate_sets):
        entity, relation = _pair(prediction)
        gold_entity, gold_relation = _pair(gold)
        entity_wrong = entity != gold_entity
        wrong_relation = relation != gold_relation
        if not entity_wrong and not wrong_relation:
            continue
        if entity_wrong and wrong_relation:
            category = 'both'
        elif entity_wrong:
            category = 'entity_only'
        else:
            category = 'relation_only'
        counts[category] += 1
        hit = gold_entity in _ids(candidates)
        if not hit:
            misses[category] += 1
        retrieved[hit] += 1
        relation_wrong[hit] += wrong_relation

    wrong = sum(counts.values())
    missed = sum(misses.values())
    miss_share = dict((category, _share(misses[category], counts[category]))
                      for category in counts)
    miss_share['any'] = _share(missed, wrong)
    miss_share['entity'] = _share(misses['both'] + misses['entity_only'],
                                  counts['both'] + counts['entity_only'])
    return ErrorBreakdown({
        'total': len(golds),
        'wrong': wrong,
        'both': counts['both'],
        'entity_only': counts['entity_only'],
        'relation_only': counts['relation_only'],
        'retrieval_miss': missed,
        'relation_error_given_hit': _share(relation_wrong[True],
                                           retrieved[True]),
        'relation_error_given_miss': _share(relation_wrong[False],
                                            retrieved[False]),
        'miss_share': miss_share,
    })
