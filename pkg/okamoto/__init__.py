from .errors import OkamotoError, ValidationError, ToleranceError, RootBracketError
from .config import OKAMOTO_HOME, SETTINGS_DIR
