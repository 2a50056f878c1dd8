from .db import Database, get_db
from .models import (
    Base,
    TrainingRun,
    EpisodeResult,
    SolveRecord,
)
