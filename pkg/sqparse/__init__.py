from .heads import load_model, save_model
from .qanswer import QuestionParser, answer, parse
