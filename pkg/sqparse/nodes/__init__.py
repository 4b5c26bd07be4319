from .forms import Candidate, LogicalForm, Answer, NoAnswer
from .reports import ErrorBreakdown, EvalReport, CellResult
from .value import Entity, Literal, value_for
from .utils import build_from_obj
